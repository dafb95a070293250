// Tape autodiff: per-primitive finite-difference checks, tape contracts,
// the parameter store, Adam, and checkpoint round-trips.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "sgt/grad_check.hpp"
#include "sgt/params.hpp"
#include "sgt/random.hpp"
#include "sgt/tape.hpp"

using namespace sgt;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double min_abs = 0.0) {
    Tensor t(shape);
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) {
        double z = rng.normal();
        if (min_abs > 0.0) z = (z < 0.0 ? -1.0 : 1.0) * (min_abs + std::fabs(z));
        p[i] = z;
    }
    return t;
}

// Runs grad_check over every scalar in the store and asserts it passes.
void expect_grads_ok(const LossBuilder& builder, ParameterStore& store) {
    GradCheckReport report = grad_check(builder, store, 10000, 1e-5, 1e-4, 99);
    INFO("worst: ", report.worst.param, "[", report.worst.index, "] analytic=",
         report.worst.analytic, " numeric=", report.worst.numeric);
    CHECK(report.pass);
}

}  // namespace

TEST_CASE("linear loss gradient is the input") {
    ParameterStore store;
    store.add("w", Tensor({1, 2}, {0.5, -0.25}));
    Tape tape;
    Var w = tape.parameter(store, "w");
    Var x = tape.constant(Tensor({2, 1}, {3, 4}));
    Var loss = tape.sum_all(tape.matmul(w, x));
    tape.backward(loss);
    CHECK(store.grad("w").at(0) == 3.0);
    CHECK(store.grad("w").at(1) == 4.0);
}

TEST_CASE("sigmoid of zeroed input has exactly zero gradient") {
    ParameterStore store;
    store.add("w", Tensor({1}, {1.7}));
    Tape tape;
    Var w = tape.parameter(store, "w");
    Var zeroed = tape.mul(w, tape.constant(Tensor::scalar(0.0)));
    Var loss = tape.sum_all(tape.sigmoid(zeroed));
    tape.backward(loss);
    CHECK(store.grad("w").at(0) == 0.0);
}

TEST_CASE("unreachable parameters receive exactly zero gradient") {
    ParameterStore store;
    store.add("used", Tensor({2}, {1, 2}));
    store.add("unused", Tensor({3}, {5, 6, 7}));
    Tape tape;
    Var u = tape.parameter(store, "used");
    tape.backward(tape.sum_all(u));
    CHECK(store.grad("used").at(0) == 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(store.grad("unused").at(i) == 0.0);
}

TEST_CASE("tape contracts") {
    ParameterStore store;
    store.add("w", Tensor({2, 2}, {1, 2, 3, 4}));
    Tape tape;
    Var w = tape.parameter(store, "w");
    CHECK_THROWS_AS(tape.backward(w), ContractError);

    Tape tape2;
    Var w2 = tape2.parameter(store, "w");
    Var loss = tape2.sum_all(w2);
    tape2.backward(loss);
    CHECK(tape2.backward_done());
    CHECK_THROWS_AS(tape2.backward(loss), ContractError);

    Tape tape3;
    CHECK_THROWS_AS(tape3.value(w2), ContractError);
    CHECK_THROWS_AS(tape3.value(Var{}), ContractError);
}

TEST_CASE("parameter vars are memoized per store and name") {
    ParameterStore store;
    store.add("w", Tensor({2}, {1, 2}));
    Tape tape;
    Var a = tape.parameter(store, "w");
    Var b = tape.parameter(store, "w");
    CHECK(a.id == b.id);
}

TEST_CASE("gradients accumulate over repeated parameter use") {
    ParameterStore store;
    store.add("w", Tensor({1, 2}, {1.0, 1.0}));
    Tape tape;
    Var w = tape.parameter(store, "w");
    Var x1 = tape.constant(Tensor({2, 1}, {1, 0}));
    Var x2 = tape.constant(Tensor({2, 1}, {2, 5}));
    Var loss = tape.add(tape.sum_all(tape.matmul(w, x1)), tape.sum_all(tape.matmul(w, x2)));
    tape.backward(loss);
    CHECK(store.grad("w").at(0) == 3.0);
    CHECK(store.grad("w").at(1) == 5.0);
}

TEST_CASE("matmul transpose gradients") {
    Rng rng(21);
    ParameterStore store;
    store.add("a", random_tensor({3, 4}, rng));
    store.add("b", random_tensor({4, 2}, rng));
    Tensor k = random_tensor({3, 2}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var prod = t.matmul(t.parameter(s, "a"), t.parameter(s, "b"));
        return t.sum_all(t.mul(prod, t.constant(k)));
    }, store);

    ParameterStore store2;
    store2.add("a", random_tensor({2, 5}, rng));
    Tensor k2 = random_tensor({5, 2}, rng);
    expect_grads_ok([k2](Tape& t, ParameterStore& s) {
        return t.sum_all(t.mul(t.transpose(t.parameter(s, "a")), t.constant(k2)));
    }, store2);
}

TEST_CASE("elementwise and broadcast gradients") {
    Rng rng(22);
    ParameterStore store;
    store.add("x", random_tensor({3, 4}, rng));
    store.add("row", random_tensor({4}, rng));
    store.add("scalar", random_tensor({1}, rng));
    Tensor k = random_tensor({3, 4}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var x = t.parameter(s, "x");
        Var y = t.add(x, t.parameter(s, "row"));
        y = t.mul(y, t.parameter(s, "scalar"));
        y = t.scale(y, 0.7);
        return t.sum_all(t.mul(y, t.constant(k)));
    }, store);
}

TEST_CASE("relu and sigmoid gradients") {
    Rng rng(23);
    ParameterStore store;
    store.add("x", random_tensor({4, 3}, rng, 0.1));
    Tensor k = random_tensor({4, 3}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var y = t.add(t.relu(t.parameter(s, "x")), t.sigmoid(t.parameter(s, "x")));
        return t.sum_all(t.mul(y, t.constant(k)));
    }, store);
}

TEST_CASE("softmax gradients with and without mask") {
    Rng rng(24);
    ParameterStore store;
    store.add("x", random_tensor({2, 5}, rng));
    Tensor k = random_tensor({2, 5}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        return t.sum_all(t.mul(t.softmax(t.parameter(s, "x"), 1), t.constant(k)));
    }, store);

    Mask m = Mask::prefix(5, 3);
    expect_grads_ok([k, m](Tape& t, ParameterStore& s) {
        return t.sum_all(t.mul(t.softmax(t.parameter(s, "x"), 1, m), t.constant(k)));
    }, store);
}

TEST_CASE("concat and slice gradients") {
    Rng rng(25);
    ParameterStore store;
    store.add("a", random_tensor({2, 3}, rng));
    store.add("b", random_tensor({2, 2}, rng));
    Tensor k = random_tensor({2, 5}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var cat = t.concat({t.parameter(s, "a"), t.parameter(s, "b")}, 1);
        return t.sum_all(t.mul(cat, t.constant(k)));
    }, store);

    Tensor k2 = random_tensor({1, 2}, rng);
    expect_grads_ok([k2](Tape& t, ParameterStore& s) {
        Var sl = t.slice(t.parameter(s, "a"), 0, 1, 2);
        sl = t.slice(sl, 1, 1, 3);
        return t.sum_all(t.mul(sl, t.constant(k2)));
    }, store);
}

TEST_CASE("masked_mean_rows gradient") {
    Rng rng(26);
    ParameterStore store;
    store.add("x", random_tensor({4, 3}, rng));
    Tensor k = random_tensor({1, 3}, rng);
    Mask m = Mask::prefix(4, 2);
    expect_grads_ok([k, m](Tape& t, ParameterStore& s) {
        return t.sum_all(t.mul(t.masked_mean_rows(t.parameter(s, "x"), m), t.constant(k)));
    }, store);
}

TEST_CASE("layer_norm gradient and forward normalization") {
    Rng rng(27);
    ParameterStore store;
    store.add("x", random_tensor({3, 6}, rng));
    store.add("gain", Tensor::full({6}, 1.0));
    store.add("bias", Tensor::zeros({6}));
    Tensor k = random_tensor({3, 6}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var y = t.layer_norm(t.parameter(s, "x"), t.parameter(s, "gain"), t.parameter(s, "bias"));
        return t.sum_all(t.mul(y, t.constant(k)));
    }, store);

    Tape tape;
    Var y = tape.layer_norm(tape.parameter(store, "x"), tape.parameter(store, "gain"),
                            tape.parameter(store, "bias"));
    const Tensor& v = tape.value(y);
    for (std::size_t i = 0; i < 3; ++i) {
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < 6; ++j) mean += v.at(i, j);
        mean /= 6.0;
        for (std::size_t j = 0; j < 6; ++j) var += (v.at(i, j) - mean) * (v.at(i, j) - mean);
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(std::fabs(var / 6.0 - 1.0) < 1e-3);
    }
}

TEST_CASE("embedding_rows gradient accumulates duplicate ids") {
    Rng rng(28);
    ParameterStore store;
    store.add("table", random_tensor({5, 3}, rng));
    Tensor k = random_tensor({3, 3}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var rows = t.embedding_rows(t.parameter(s, "table"), {1, 3, 1});
        return t.sum_all(t.mul(rows, t.constant(k)));
    }, store);

    Tape tape;
    Var rows = tape.embedding_rows(tape.parameter(store, "table"), {2, 2});
    store.zero_grads();
    tape.backward(tape.sum_all(rows));
    CHECK(store.grad("table").at(2, 0) == 2.0);
    CHECK(store.grad("table").at(0, 0) == 0.0);
    CHECK_THROWS_AS([&] {
        Tape t2;
        t2.embedding_rows(t2.parameter(store, "table"), {7});
    }(), DimensionError);
}

TEST_CASE("add_n gradient fans out") {
    Rng rng(29);
    ParameterStore store;
    store.add("a", random_tensor({2, 2}, rng));
    store.add("b", random_tensor({2, 2}, rng));
    store.add("c", random_tensor({2, 2}, rng));
    Tensor k = random_tensor({2, 2}, rng);
    expect_grads_ok([k](Tape& t, ParameterStore& s) {
        Var sum = t.add_n({t.parameter(s, "a"), t.parameter(s, "b"), t.parameter(s, "c")});
        return t.sum_all(t.mul(sum, t.constant(k)));
    }, store);
}

TEST_CASE("cross_entropy_logits value and gradient") {
    ParameterStore store;
    store.add("logits", Tensor::zeros({1, 4}));
    Tape tape;
    Var loss = tape.cross_entropy_logits(tape.parameter(store, "logits"), 2);
    CHECK(tape.value(loss).at(0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    tape.backward(loss);
    CHECK(store.grad("logits").at(0, 2) == doctest::Approx(0.25 - 1.0).epsilon(1e-12));
    CHECK(store.grad("logits").at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));

    Rng rng(30);
    ParameterStore store2;
    store2.add("logits", random_tensor({1, 6}, rng));
    expect_grads_ok([](Tape& t, ParameterStore& s) {
        return t.cross_entropy_logits(t.parameter(s, "logits"), 4);
    }, store2);

    Tape t3;
    CHECK_THROWS_AS(t3.cross_entropy_logits(t3.constant(Tensor::zeros({1, 3})), 3), ContractError);
}

TEST_CASE("grad_check quadratic and corrupt hook") {
    ParameterStore store;
    store.add("theta", Tensor({1}, {3.0}));
    auto quad = [](Tape& t, ParameterStore& s) {
        Var th = t.parameter(s, "theta");
        return t.scale(t.sum_all(t.mul(th, th)), 0.5);
    };
    GradCheckReport ok = grad_check(quad, store, 10, 1e-5, 1e-4, 1);
    CHECK(ok.pass);
    CHECK(ok.worst.analytic == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::fabs(ok.worst.numeric - 3.0) < 1e-9);

    GradCheckReport bad = grad_check(quad, store, 10, 1e-5, 1e-4, 1, 2.0);
    CHECK(!bad.pass);
    // |2g - g| / max(2g, g) with g != 0
    CHECK(bad.max_rel_err == doctest::Approx(0.5).epsilon(1e-6));

    CHECK_THROWS_AS(grad_check(quad, store, 10, 1e-2, 1e-4), ConfigError);
    CHECK_THROWS_AS(grad_check(quad, store, 0, 1e-5, 1e-4), ConfigError);
}

TEST_CASE("adam config validation and schedule") {
    AdamConfig cfg;
    cfg.validate();
    CHECK(cfg.lr_at_epoch(0) == doctest::Approx(0.0001).epsilon(1e-15));
    CHECK(cfg.lr_at_epoch(1) == doctest::Approx(0.00005).epsilon(1e-15));
    CHECK(cfg.lr_at_epoch(3) == doctest::Approx(0.0000125).epsilon(1e-15));

    AdamConfig frozen;
    frozen.lr = 0.0;
    frozen.validate();

    AdamConfig bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = AdamConfig{};
    bad.decay = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = AdamConfig{};
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parameter store basics") {
    ParameterStore store;
    store.add("b", Tensor({2}, {1, 2}));
    store.add("a", Tensor({3}, {1, 2, 3}));
    CHECK(store.count() == 2);
    CHECK(store.scalar_count() == 5);
    CHECK(store.has("a"));
    CHECK(!store.has("z"));
    auto names = store.names();
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "a");
    CHECK(names[1] == "b");

    CHECK_THROWS_AS(store.add("a", Tensor({1})), ContractError);
    CHECK_THROWS_AS(store.value("missing"), ContractError);
    CHECK_THROWS_AS(store.set_value("a", Tensor({4})), DimensionError);
    CHECK_THROWS_AS(store.accumulate_grad("a", Tensor({4})), DimensionError);
}

TEST_CASE("adam step with zero gradient leaves values unchanged") {
    ParameterStore store;
    store.add("w", Tensor({3}, {1.5, -2.0, 0.25}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    store.adam_step(cfg);
    CHECK(store.value("w").at(0) == 1.5);
    CHECK(store.value("w").at(1) == -2.0);
    CHECK(store.entry("w").step == 1);
}

TEST_CASE("first adam step moves by about lr against the gradient") {
    ParameterStore store;
    store.add("w", Tensor({2}, {1.0, 1.0}));
    store.accumulate_grad("w", Tensor({2}, {1.0, -4.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    store.adam_step(cfg);
    // m-hat = g, v-hat = g^2 on step 1, so the update is lr * sign(g) / (1 + eps).
    CHECK(store.value("w").at(0) == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(store.value("w").at(1) == doctest::Approx(1.1).epsilon(1e-7));
    // Gradients zeroed after the step.
    CHECK(store.grad("w").at(0) == 0.0);
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
    ParameterStore store;
    store.add("fine", Tensor({1}, {1.0}));
    store.add("poisoned", Tensor({1}, {1.0}));
    store.accumulate_grad("poisoned", Tensor({1}, {std::nan("")}));
    AdamConfig cfg;
    try {
        store.adam_step(cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("poisoned") != std::string::npos);
    }
}

TEST_CASE("checkpoint roundtrip restores values bitwise") {
    Rng rng(31);
    ParameterStore store;
    store.add("alpha", random_tensor({3, 2}, rng));
    store.add("beta", random_tensor({4}, rng));
    const std::string path = "ckpt_roundtrip.bin";
    store.save_checkpoint(path);

    Tensor alpha_orig = store.value("alpha");
    store.set_value("alpha", Tensor::zeros({3, 2}));
    store.load_checkpoint(path);
    CHECK(std::memcmp(store.value("alpha").data(), alpha_orig.data(),
                      alpha_orig.size() * sizeof(double)) == 0);

    ParameterStore wrong_shape;
    wrong_shape.add("alpha", Tensor({2, 3}));
    wrong_shape.add("beta", Tensor({4}));
    CHECK_THROWS_AS(wrong_shape.load_checkpoint(path), IoError);

    ParameterStore missing;
    missing.add("alpha", Tensor({3, 2}));
    CHECK_THROWS_AS(missing.load_checkpoint(path), IoError);

    CHECK_THROWS_AS(store.load_checkpoint("no_such_checkpoint.bin"), IoError);
    std::remove(path.c_str());
}
