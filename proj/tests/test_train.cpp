// Training loop and evaluation: schedules, determinism, frozen runs, NaN
// abort, early stop, and report invariants.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sgt/train.hpp"

using namespace sgt;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(bool(is));
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

std::string fresh_dir(const std::string& name) {
    const std::string dir = (fs::temp_directory_path() / name).string();
    fs::remove_all(dir);
    return dir;
}

Dataset small_dataset(std::uint64_t seed, std::size_t n_train = 24, std::size_t n_val = 8) {
    SyntheticTaskSpec spec;
    spec.seed = seed;
    return generate_dataset(spec, n_train, n_val);
}

bool values_equal(const ParameterStore& a, const ParameterStore& b) {
    if (a.names() != b.names()) return false;
    for (const auto& name : a.names()) {
        const Tensor& ta = a.value(name);
        const Tensor& tb = b.value(name);
        if (ta.shape() != tb.shape()) return false;
        if (std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("zero learning rate freezes the loss across epochs") {
    Dataset ds = small_dataset(3);
    Model model = build_sst_model(ModelConfig{});
    TrainOptions opts;
    opts.adam.lr = 0.0;
    opts.epochs = 3;
    opts.batch_size = 8;
    TrainResult result = train(model, ds, opts);
    REQUIRE(result.history.size() == 3);
    CHECK(std::fabs(result.history[0].train_loss - result.history[2].train_loss) <= 1e-12);
    CHECK(result.history[0].val_loss == result.history[2].val_loss);
    CHECK(result.history[0].val_acc == result.history[2].val_acc);
}

TEST_CASE("the learning rate halves every epoch") {
    Dataset ds = small_dataset(5, 8, 4);
    Model model = build_sst_model(ModelConfig{});
    TrainOptions opts;
    opts.epochs = 3;
    opts.batch_size = 8;
    TrainResult result = train(model, ds, opts);
    REQUIRE(result.history.size() == 3);
    CHECK(result.history[0].lr == 0.0001);
    CHECK(result.history[1].lr == 0.00005);
    CHECK(result.history[2].lr == 0.000025);
}

TEST_CASE("training decreases the loss on the toy task") {
    Dataset ds = small_dataset(7, 64, 16);
    Model model = build_sst_model(ModelConfig{});
    TrainOptions opts;
    opts.adam.lr = 0.002;
    opts.adam.decay = 1.0;
    opts.epochs = 5;
    opts.batch_size = 16;
    TrainResult result = train(model, ds, opts);
    REQUIRE(result.history.size() == 5);
    CHECK(result.history.back().train_loss < result.history.front().train_loss);
    CHECK(!result.aborted);
}

TEST_CASE("identical seeds produce byte-identical artifacts") {
    const std::string da = fresh_dir("sgt_train_a");
    const std::string db = fresh_dir("sgt_train_b");
    for (const std::string& dir : {da, db}) {
        Dataset ds = small_dataset(11, 16, 8);
        Model model = build_cst_model(ModelConfig{});
        TrainOptions opts;
        opts.epochs = 2;
        opts.batch_size = 8;
        opts.adam.lr = 0.001;
        opts.seed = 42;
        opts.out_dir = dir;
        TrainResult result = train(model, ds, opts);
        CHECK(result.history.size() == 2);
    }
    CHECK(slurp(da + "/metrics.jsonl") == slurp(db + "/metrics.jsonl"));
    CHECK(slurp(da + "/final.ckpt") == slurp(db + "/final.ckpt"));
    CHECK(slurp(da + "/epoch_001.ckpt") == slurp(db + "/epoch_001.ckpt"));
    CHECK(slurp(da + "/epoch_002.ckpt") == slurp(db + "/epoch_002.ckpt"));
    CHECK(slurp(da + "/epoch_002.ckpt") == slurp(da + "/final.ckpt"));
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST_CASE("a non-finite loss aborts and keeps the last good checkpoint") {
    const std::string dir = fresh_dir("sgt_train_nan");
    Dataset ds = small_dataset(13, 16, 8);
    Model model = build_sst_model(ModelConfig{});
    Tensor poisoned = model.store.value("head.cls");
    for (std::size_t i = 0; i < poisoned.size(); ++i) poisoned.mutable_data()[i] = 1e308;
    model.store.set_value("head.cls", poisoned);
    Tensor before = model.store.value("embed.proj");

    TrainOptions opts;
    opts.epochs = 3;
    opts.out_dir = dir;
    TrainResult result = train(model, ds, opts);
    CHECK(result.aborted);
    CHECK(result.history.empty());
    CHECK(slurp(dir + "/metrics.jsonl").empty());

    Model reloaded = build_sst_model(ModelConfig{});
    reloaded.store.load_checkpoint(dir + "/final.ckpt");
    CHECK(std::memcmp(reloaded.store.value("embed.proj").data(), before.data(),
                      before.size() * sizeof(double)) == 0);
    fs::remove_all(dir);
}

TEST_CASE("zero epochs still write the initial checkpoint and empty metrics") {
    const std::string dir = fresh_dir("sgt_train_zero");
    Dataset ds = small_dataset(17, 8, 4);
    Model model = build_sst_model(ModelConfig{});
    TrainOptions opts;
    opts.epochs = 0;
    opts.out_dir = dir;
    TrainResult result = train(model, ds, opts);
    CHECK(!result.aborted);
    CHECK(result.history.empty());
    CHECK(slurp(dir + "/metrics.jsonl").empty());

    Model fresh = build_sst_model(ModelConfig{});
    Model reloaded = build_sst_model(ModelConfig{});
    reloaded.store.load_checkpoint(dir + "/final.ckpt");
    CHECK(values_equal(fresh.store, reloaded.store));
    fs::remove_all(dir);
}

TEST_CASE("early stop halts once the accuracy target is reached") {
    Dataset ds = small_dataset(19, 16, 8);
    Model model = build_sst_model(ModelConfig{});
    TrainOptions opts;
    opts.epochs = 10;
    opts.stop_at_val_acc = 0.0;
    TrainResult result = train(model, ds, opts);
    CHECK(result.history.size() == 1);
}

TEST_CASE("evaluation reports are consistent and reproducible") {
    SyntheticTaskSpec spec;
    spec.seed = 23;
    Dataset ds = generate_dataset(spec, 4, 1000);
    Model model = build_sst_model(ModelConfig{});

    EvalReport a = evaluate(model, ds, ds.val_idx);
    EvalReport b = evaluate(model, ds, ds.val_idx);
    CHECK(a.to_json() == b.to_json());

    std::size_t total = 0, correct = 0;
    for (std::size_t cls = 0; cls < 8; ++cls) {
        total += a.per_class_total[cls];
        correct += a.per_class_correct[cls];
        std::size_t row = 0;
        for (std::size_t p = 0; p < 8; ++p) row += a.confusion[cls][p];
        CHECK(row == a.per_class_total[cls]);
        CHECK(a.confusion[cls][cls] == a.per_class_correct[cls]);
    }
    CHECK(total == 1000);
    CHECK(a.accuracy == double(correct) / 1000.0);

    // Untrained accuracy sits in the chance band for 8 classes.
    CHECK(a.accuracy >= 0.05);
    CHECK(a.accuracy <= 0.25);
}

TEST_CASE("mismatched model and dataset dimensions are rejected") {
    SyntheticTaskSpec spec;
    spec.seed = 29;
    spec.d_img = 8;
    Dataset ds = generate_dataset(spec, 8, 4);
    Model model = build_sst_model(ModelConfig{});  // expects d_img = 32
    TrainOptions opts;
    CHECK_THROWS_AS(train(model, ds, opts), ConfigError);
    CHECK_THROWS_AS(evaluate(model, ds, ds.val_idx), ConfigError);
}
