// Multi-head attention: hand values, scalar-oracle equivalence, masking,
// permutation invariance, the identity reduction, and layer gradients.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "sgt/attention.hpp"
#include "sgt/grad_check.hpp"
#include "sgt/init.hpp"
#include "sgt/random.hpp"
#include "sgt/reference.hpp"

using namespace sgt;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(shape);
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.normal();
    return t;
}

Tensor identity(std::size_t n) {
    Tensor t({n, n});
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 1.0;
    return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const double* b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a.data()[i] - b[i]));
    return worst;
}

ref::Vec to_vec(const Tensor& t) { return ref::Vec(t.data(), t.data() + t.size()); }

// Registers h heads + mixer with the exact tensors used by the reference.
ref::MultiHeadWeights plant_weights(ParameterStore& store, const std::string& prefix,
                                    std::size_t d, std::size_t h, Rng& rng) {
    ref::MultiHeadWeights w;
    const std::size_t dh = d / h;
    for (std::size_t i = 0; i < h; ++i) {
        Tensor wa = random_tensor({d, dh}, rng);
        Tensor wb = random_tensor({d, dh}, rng);
        Tensor wc = random_tensor({d, dh}, rng);
        const std::string head = prefix + ".h" + std::to_string(i);
        store.add(head + ".wa", wa);
        store.add(head + ".wb", wb);
        store.add(head + ".wc", wc);
        w.heads.push_back({to_vec(wa), to_vec(wb), to_vec(wc)});
    }
    Tensor mix = random_tensor({d, d}, rng);
    store.add(prefix + ".mix", mix);
    w.mix = to_vec(mix);
    return w;
}

LayerConfig bare_config(std::size_t d, std::size_t h) {
    LayerConfig cfg;
    cfg.d = d;
    cfg.h = h;
    cfg.use_residual = false;
    cfg.use_norm = false;
    cfg.use_ffn = false;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    LayerConfig cfg;
    cfg.d = 10;
    cfg.h = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.h = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LayerConfig{};
    cfg.validate();
    CHECK(cfg.d_head() == 16);
    CHECK(cfg.ff_dim() == 256);
}

TEST_CASE("single query and key attends with weight one") {
    Rng rng(2);
    Tape tape;
    Var a = tape.constant(random_tensor({1, 4}, rng));
    Var b = tape.constant(random_tensor({1, 4}, rng));
    Tensor cv = random_tensor({1, 4}, rng);
    Var c = tape.constant(cv);
    CoreOut out = attention_core(tape, a, b, c, std::nullopt);
    CHECK(tape.value(out.weights).at(0, 0) == 1.0);
    CHECK(bitwise_equal(tape.value(out.output), cv));
}

TEST_CASE("orthogonal self-attention weights match direct evaluation") {
    // Two orthogonal rows; logit matrix is diag(|a_i|^2)/sqrt(d).
    Tensor x = Tensor::from_rows({{2, 0}, {0, 3}});
    Tape tape;
    Var v = tape.constant(x);
    CoreOut out = attention_core(tape, v, v, v, std::nullopt);
    const double s = std::sqrt(2.0);
    const double w00 = std::exp(4.0 / s) / (std::exp(4.0 / s) + std::exp(0.0));
    const double w11 = std::exp(9.0 / s) / (std::exp(9.0 / s) + std::exp(0.0));
    CHECK(tape.value(out.weights).at(0, 0) == doctest::Approx(w00).epsilon(1e-12));
    CHECK(tape.value(out.weights).at(1, 1) == doctest::Approx(w11).epsilon(1e-12));
    CHECK(tape.value(out.weights).at(0, 0) > 0.5);
}

TEST_CASE("attention_core matches the scalar oracle") {
    Rng rng(11);
    Tensor a = random_tensor({3, 2}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    Tensor c = random_tensor({4, 2}, rng);
    Tape tape;
    CoreOut out = attention_core(tape, tape.constant(a), tape.constant(b), tape.constant(c),
                                 std::nullopt);
    ref::Vec expect = ref::attention_core(to_vec(a), to_vec(b), to_vec(c), 3, 4, 2, {});
    CHECK(max_abs_diff(tape.value(out.output), expect.data()) < 1e-12);

    Mask m = Mask::prefix(4, 2);
    Tape tape2;
    CoreOut masked = attention_core(tape2, tape2.constant(a), tape2.constant(b),
                                    tape2.constant(c), m);
    ref::Vec expect2 = ref::attention_core(to_vec(a), to_vec(b), to_vec(c), 3, 4, 2, {1, 1, 0, 0});
    CHECK(max_abs_diff(tape2.value(masked.output), expect2.data()) < 1e-12);
}

TEST_CASE("attention_core rejects inconsistent shapes") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 3}));
    Var b = tape.constant(Tensor({4, 2}));
    CHECK_THROWS_AS(attention_core(tape, a, b, b, std::nullopt), DimensionError);
}

TEST_CASE("multi_head with identity projections reduces to attention_core") {
    Rng rng(3);
    const std::size_t d = 4;
    ParameterStore store;
    store.add("L.h0.wa", identity(d));
    store.add("L.h0.wb", identity(d));
    store.add("L.h0.wc", identity(d));
    store.add("L.mix", identity(d));

    Tensor x = random_tensor({3, d}, rng);
    Tape tape;
    Var v = tape.constant(x);
    MultiHeadOut mh = multi_head(tape, store, "L", bare_config(d, 1), v, v, v, std::nullopt);
    CoreOut core = attention_core(tape, v, v, v, std::nullopt);
    CHECK(bitwise_equal(tape.value(mh.output), tape.value(core.output)));
}

TEST_CASE("multi_head matches the scalar oracle without scaffolding") {
    Rng rng(17);
    for (std::size_t h : {std::size_t{1}, std::size_t{2}}) {
        const std::size_t d = 4;
        ParameterStore store;
        ref::MultiHeadWeights w = plant_weights(store, "L", d, h, rng);
        Tensor a = random_tensor({3, d}, rng);
        Tensor b = random_tensor({4, d}, rng);
        Tensor c = random_tensor({4, d}, rng);

        Tape tape;
        MultiHeadOut out = multi_head(tape, store, "L", bare_config(d, h), tape.constant(a),
                                      tape.constant(b), tape.constant(c), Mask::prefix(4, 3));
        ref::Vec expect = ref::multi_head(to_vec(a), to_vec(b), to_vec(c), 3, 4, d, w,
                                          {1, 1, 1, 0});
        CHECK(max_abs_diff(tape.value(out.output), expect.data()) < 1e-12);
    }
}

TEST_CASE("full-scale head partition") {
    LayerConfig cfg;
    cfg.d = 512;
    cfg.h = 8;
    cfg.validate();
    CHECK(cfg.d_head() == 64);

    ParameterStore store;
    add_attention_params(store, "L", cfg, 1);
    Rng rng(4);
    Tape tape;
    Var x = tape.constant(random_tensor({3, 512}, rng));
    MultiHeadOut out = multi_head(tape, store, "L", cfg, x, x, x, std::nullopt);
    REQUIRE(tape.value(out.output).shape() == Shape{3, 512});
    CHECK(tape.value(out.output).all_finite());
    CHECK(out.head_weights.size() == 8);
}

TEST_CASE("attention weights form a masked distribution") {
    Rng rng(5);
    ParameterStore store;
    LayerConfig cfg = bare_config(8, 2);
    add_attention_params(store, "L", cfg, 7);
    Tape tape;
    Var x = tape.constant(random_tensor({5, 8}, rng));
    Mask m = Mask::prefix(5, 3);
    MultiHeadOut out = multi_head(tape, store, "L", cfg, x, x, x, m);
    for (const Var& wv : out.head_weights) {
        const Tensor& w = tape.value(wv);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) sum += w.at(i, j);
            CHECK(std::fabs(sum - 1.0) < 1e-12);
            CHECK(w.at(i, 3) == 0.0);
            CHECK(w.at(i, 4) == 0.0);
        }
    }
}

TEST_CASE("output invariant under joint key and value permutation") {
    Rng rng(6);
    ParameterStore store;
    LayerConfig cfg;
    cfg.d = 8;
    cfg.h = 2;
    add_attention_params(store, "L", cfg, 9);

    Tensor x = random_tensor({2, 8}, rng);
    Tensor y = random_tensor({4, 8}, rng);
    std::vector<std::uint8_t> flags{1, 0, 1, 1};
    // Permutation (3, 0, 2, 1) of key/value rows together with the mask.
    std::vector<std::size_t> perm{3, 0, 2, 1};
    Tensor yp({4, 8});
    std::vector<std::uint8_t> fp(4);
    for (std::size_t i = 0; i < 4; ++i) {
        fp[i] = flags[perm[i]];
        std::memcpy(yp.mutable_data() + i * 8, y.data() + perm[i] * 8, 8 * sizeof(double));
    }

    Tape t1, t2;
    Tensor o1 = t1.value(multi_head(t1, store, "L", cfg, t1.constant(x), t1.constant(y),
                                    t1.constant(y), Mask({4}, flags))
                             .output);
    Tensor o2 = t2.value(multi_head(t2, store, "L", cfg, t2.constant(x), t2.constant(yp),
                                    t2.constant(yp), Mask({4}, fp))
                             .output);
    CHECK(max_abs_diff(o1, o2.data()) < 1e-12);
}

TEST_CASE("scaling inputs sharpens attention") {
    Rng rng(8);
    Tensor a = random_tensor({3, 4}, rng);
    auto max_weight = [&](double factor) {
        Tape tape;
        Var v = tape.constant(scale(a, factor));
        CoreOut out = attention_core(tape, v, v, v, std::nullopt);
        double mx = 0.0;
        const Tensor& w = tape.value(out.weights);
        for (std::size_t i = 0; i < w.size(); ++i) mx = std::max(mx, w.data()[i]);
        return mx;
    };
    const double w1 = max_weight(1.0);
    const double w2 = max_weight(2.0);
    const double w4 = max_weight(4.0);
    CHECK(w2 >= w1);
    CHECK(w4 >= w2);
}

TEST_CASE("self and guided attention are multi_head specializations") {
    Rng rng(9);
    ParameterStore store;
    LayerConfig cfg;
    cfg.d = 8;
    cfg.h = 2;
    add_attention_params(store, "L", cfg, 12);
    Tensor xv = random_tensor({3, 8}, rng);

    Tape tape;
    Var x = tape.constant(xv);
    Tensor self_out = tape.value(self_attention(tape, store, "L", cfg, x, std::nullopt).output);
    Tensor mh_out = tape.value(multi_head(tape, store, "L", cfg, x, x, x, std::nullopt).output);
    Tensor guided_out = tape.value(guided_attention(tape, store, "L", cfg, x, x, std::nullopt).output);
    CHECK(bitwise_equal(self_out, mh_out));
    CHECK(bitwise_equal(guided_out, mh_out));
}

TEST_CASE("duplicate input rows produce identical output rows") {
    Rng rng(10);
    ParameterStore store;
    LayerConfig cfg;
    cfg.d = 8;
    cfg.h = 2;
    add_attention_params(store, "L", cfg, 13);
    Tensor xv({3, 8});
    Tensor row = random_tensor({1, 8}, rng);
    for (std::size_t i = 0; i < 3; ++i)
        std::memcpy(xv.mutable_data() + i * 8, row.data(), 8 * sizeof(double));

    Tape tape;
    Tensor out = tape.value(self_attention(tape, store, "L", cfg, tape.constant(xv), std::nullopt).output);
    CHECK(std::memcmp(out.data(), out.data() + 8, 8 * sizeof(double)) == 0);
    CHECK(std::memcmp(out.data(), out.data() + 16, 8 * sizeof(double)) == 0);
}

TEST_CASE("guided attention over a single context row") {
    Rng rng(14);
    ParameterStore store;
    LayerConfig cfg = bare_config(4, 1);
    add_attention_params(store, "L", cfg, 15);
    Tape tape;
    Var x = tape.constant(random_tensor({3, 4}, rng));
    Var y = tape.constant(random_tensor({1, 4}, rng));
    MultiHeadOut out = guided_attention(tape, store, "L", cfg, x, y, std::nullopt);
    const Tensor& w = tape.value(out.head_weights[0]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.at(i, 0) == 1.0);
}

TEST_CASE("full layer gradient check") {
    Rng rng(16);
    ParameterStore store;
    LayerConfig cfg;
    cfg.d = 8;
    cfg.h = 2;
    cfg.d_ff = 8;
    add_attention_params(store, "L", cfg, 20);
    Tensor xv = random_tensor({3, 8}, rng);
    Tensor k = random_tensor({3, 8}, rng);
    Mask m = Mask::prefix(3, 2);

    auto builder = [xv, k, m, cfg](Tape& t, ParameterStore& s) {
        Var out = multi_head(t, s, "L", cfg, t.constant(xv), t.constant(xv), t.constant(xv), m).output;
        return t.sum_all(t.mul(out, t.constant(k)));
    };
    GradCheckReport report = grad_check(builder, store, 10000, 1e-5, 1e-4, 21);
    INFO("worst: ", report.worst.param, " rel=", report.max_rel_err);
    CHECK(report.pass);
}

TEST_CASE("vanilla multi-head gradient at d=16 h=4") {
    Rng rng(18);
    ParameterStore store;
    LayerConfig cfg = bare_config(16, 4);
    add_attention_params(store, "L", cfg, 22);
    Tensor xv = random_tensor({3, 16}, rng);
    Tensor k = random_tensor({3, 16}, rng);
    auto builder = [xv, k, cfg](Tape& t, ParameterStore& s) {
        Var out = multi_head(t, s, "L", cfg, t.constant(xv), t.constant(xv), t.constant(xv),
                             std::nullopt).output;
        return t.sum_all(t.mul(out, t.constant(k)));
    };
    GradCheckReport report = grad_check(builder, store, 200, 1e-5, 1e-4, 23);
    CHECK(report.pass);
}
