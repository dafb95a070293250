#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/tensor.hpp"

namespace sgt {

// Synthetic planted-rule task. Each example pairs a bag of region feature
// vectors (noisy copies of latent prototypes) with a token sequence holding
// exactly one query token. The answer is the queried prototype's label when
// that prototype occurs among the regions, else the designated "none" class
// (index n_prototypes).
struct SyntheticTaskSpec {
    std::size_t n_prototypes = 7;
    std::size_t vocab = 32;     // id 0 pad, 1..n_prototypes query tokens, rest fillers
    std::size_t n_answers = 8;  // N; must be >= n_prototypes + 1
    std::size_t d_img = 32;
    std::size_t min_regions = 3;
    std::size_t max_regions = 10;
    std::size_t min_tokens = 1;
    std::size_t max_tokens = 8;
    double noise_std = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

// One gathered batch. Regions are zero-padded to max_regions, token ids to
// max_tokens with id 0; masks cover the padding.
struct VqaBatch {
    Tensor regions;  // batch x max_regions x d_img
    Mask region_mask;
    Tensor tokens;  // batch x max_tokens, ids stored as doubles
    Mask token_mask;
    std::vector<std::size_t> answers;

    std::size_t size() const { return answers.size(); }
};

struct Dataset {
    SyntheticTaskSpec spec;
    Tensor prototypes;  // n_prototypes x d_img
    Tensor regions;     // n x max_regions x d_img
    Tensor tokens;      // n x max_tokens
    Tensor mask_flags;  // n x (max_regions + max_tokens), region flags first
    std::vector<std::size_t> labels;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;

    std::size_t size() const { return labels.size(); }

    Tensor example_regions(std::size_t i) const;  // max_regions x d_img
    std::vector<std::size_t> token_ids(std::size_t i) const;
    Mask region_mask(std::size_t i) const;
    Mask token_mask(std::size_t i) const;
    std::size_t label(std::size_t i) const { return labels.at(i); }

    VqaBatch batch(const std::vector<std::size_t>& ids) const;
};

// The planted rule, computed from example contents alone: find the query
// token, assign every valid region row to its nearest prototype (Euclidean),
// answer with the queried label if present, else the none class.
std::size_t rule_label(const Tensor& prototypes, const Tensor& regions, const Mask& region_mask,
                       const std::vector<std::size_t>& token_ids, std::size_t n_prototypes);

// Generates n_train + n_val examples from one seeded stream; the first
// n_train indices form the train split.
Dataset generate_dataset(const SyntheticTaskSpec& spec, std::size_t n_train, std::size_t n_val);

// Directory layout: manifest.txt (key=value), prototypes.sgt1, regions.sgt1,
// tokens.sgt1, masks.sgt1, labels.sgt1, train.idx, val.idx.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace sgt
