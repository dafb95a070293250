// Synthetic planted-rule dataset: rule recoverability, determinism, class
// balance, padding discipline, and the on-disk roundtrip.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "sgt/dataset.hpp"
#include "sgt/errors.hpp"

using namespace sgt;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(bool(is));
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

SyntheticTaskSpec small_spec(std::uint64_t seed) {
    SyntheticTaskSpec spec;
    spec.d_img = 8;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("unsatisfiable task specs are rejected") {
    SyntheticTaskSpec spec;
    spec.n_prototypes = 8;  // leaves no slot for the none answer when N = 8
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = SyntheticTaskSpec{};
    spec.vocab = spec.n_prototypes + 1;  // no filler ids left
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = SyntheticTaskSpec{};
    spec.min_regions = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = SyntheticTaskSpec{};
    spec.noise_std = -0.1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = SyntheticTaskSpec{};
    spec.n_prototypes = 1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    CHECK_NOTHROW(SyntheticTaskSpec{}.validate());
}

TEST_CASE("noise-free labels match the rule oracle everywhere") {
    SyntheticTaskSpec spec = small_spec(3);
    spec.noise_std = 0.0;
    Dataset ds = generate_dataset(spec, 250, 50);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.labels[i] < spec.n_answers);
        CHECK(ds.labels[i] ==
              rule_label(ds.prototypes, ds.example_regions(i), ds.region_mask(i), ds.token_ids(i),
                         spec.n_prototypes));
    }
}

TEST_CASE("labels stay recomputable at the default noise level") {
    Dataset ds = generate_dataset(small_spec(4), 200, 50);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.labels[i] ==
              rule_label(ds.prototypes, ds.example_regions(i), ds.region_mask(i), ds.token_ids(i),
                         ds.spec.n_prototypes));
    }
}

TEST_CASE("generation is bitwise deterministic in the seed") {
    Dataset a = generate_dataset(small_spec(11), 60, 20);
    Dataset b = generate_dataset(small_spec(11), 60, 20);
    CHECK(bitwise_equal(a.regions, b.regions));
    CHECK(bitwise_equal(a.tokens, b.tokens));
    CHECK(bitwise_equal(a.prototypes, b.prototypes));
    CHECK(a.labels == b.labels);

    Dataset c = generate_dataset(small_spec(12), 60, 20);
    CHECK(!bitwise_equal(a.regions, c.regions));
}

TEST_CASE("answer classes stay near uniform") {
    SyntheticTaskSpec spec = small_spec(21);
    Dataset ds = generate_dataset(spec, 1500, 500);
    std::vector<std::size_t> counts(spec.n_answers, 0);
    for (std::size_t l : ds.labels) counts[l]++;
    const double uniform = 1.0 / double(spec.n_answers);
    for (std::size_t cls = 0; cls < spec.n_answers; ++cls) {
        const double freq = double(counts[cls]) / double(ds.size());
        CHECK(freq >= uniform * 0.8);
        CHECK(freq <= uniform * 1.2);
    }
}

TEST_CASE("padding is exact and sizes stay within bounds") {
    Dataset ds = generate_dataset(small_spec(31), 150, 50);
    const auto& spec = ds.spec;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Mask rm = ds.region_mask(i);
        Mask tm = ds.token_mask(i);
        CHECK(rm.count_valid() >= spec.min_regions);
        CHECK(rm.count_valid() <= spec.max_regions);
        CHECK(tm.count_valid() >= spec.min_tokens);
        CHECK(tm.count_valid() <= spec.max_tokens);

        Tensor reg = ds.example_regions(i);
        for (std::size_t row = 0; row < spec.max_regions; ++row) {
            if (rm.valid(row)) continue;
            for (std::size_t j = 0; j < spec.d_img; ++j) CHECK(reg.at(row, j) == 0.0);
        }
        std::vector<std::size_t> ids = ds.token_ids(i);
        std::size_t queries = 0;
        for (std::size_t pos = 0; pos < spec.max_tokens; ++pos) {
            if (!tm.valid(pos)) {
                CHECK(ids[pos] == 0);
                continue;
            }
            CHECK(ids[pos] >= 1);
            CHECK(ids[pos] < spec.vocab);
            if (ids[pos] <= spec.n_prototypes) queries++;
        }
        CHECK(queries == 1);
    }
}

TEST_CASE("splits are disjoint and cover every example") {
    Dataset ds = generate_dataset(small_spec(41), 80, 20);
    std::set<std::size_t> seen(ds.train_idx.begin(), ds.train_idx.end());
    CHECK(seen.size() == 80);
    for (std::size_t i : ds.val_idx) CHECK(seen.insert(i).second);
    CHECK(seen.size() == 100);
    CHECK(*seen.rbegin() == 99);
}

TEST_CASE("batch gathering matches the per-example accessors") {
    Dataset ds = generate_dataset(small_spec(51), 30, 10);
    VqaBatch batch = ds.batch({5, 17, 2});
    CHECK(batch.size() == 3);
    CHECK(batch.regions.shape() == Shape{3, ds.spec.max_regions, ds.spec.d_img});
    CHECK(batch.tokens.shape() == Shape{3, ds.spec.max_tokens});

    const std::size_t rd = ds.spec.max_regions * ds.spec.d_img;
    Tensor want = ds.example_regions(17);
    CHECK(std::memcmp(batch.regions.data() + rd, want.data(), rd * sizeof(double)) == 0);
    CHECK(batch.answers[0] == ds.labels[5]);
    CHECK(batch.answers[2] == ds.labels[2]);
    for (std::size_t j = 0; j < ds.spec.max_regions; ++j)
        CHECK(batch.region_mask.valid(1, j) == ds.region_mask(17).valid(j));
}

TEST_CASE("the on-disk roundtrip preserves everything") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "sgt_ds_roundtrip").string();
    fs::remove_all(dir);

    Dataset ds = generate_dataset(small_spec(61), 40, 10);
    save_dataset(ds, dir);
    Dataset back = load_dataset(dir);

    CHECK(bitwise_equal(ds.regions, back.regions));
    CHECK(bitwise_equal(ds.tokens, back.tokens));
    CHECK(bitwise_equal(ds.mask_flags, back.mask_flags));
    CHECK(bitwise_equal(ds.prototypes, back.prototypes));
    CHECK(ds.labels == back.labels);
    CHECK(ds.train_idx == back.train_idx);
    CHECK(ds.val_idx == back.val_idx);
    CHECK(ds.spec.noise_std == back.spec.noise_std);
    CHECK(ds.spec.seed == back.spec.seed);
    fs::remove_all(dir);
}

TEST_CASE("saving twice yields identical bytes") {
    namespace fs = std::filesystem;
    const std::string da = (fs::temp_directory_path() / "sgt_ds_a").string();
    const std::string db = (fs::temp_directory_path() / "sgt_ds_b").string();
    fs::remove_all(da);
    fs::remove_all(db);

    save_dataset(generate_dataset(small_spec(71), 25, 5), da);
    save_dataset(generate_dataset(small_spec(71), 25, 5), db);
    for (const char* name : {"manifest.txt", "prototypes.sgt1", "regions.sgt1", "tokens.sgt1",
                             "masks.sgt1", "labels.sgt1", "train.idx", "val.idx"}) {
        CHECK(slurp(da + "/" + name) == slurp(db + "/" + name));
    }
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST_CASE("loading a missing directory fails cleanly") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/sgt_dataset"), IoError);
}
