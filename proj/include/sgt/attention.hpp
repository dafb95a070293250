#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgt/params.hpp"
#include "sgt/tape.hpp"

namespace sgt {

// One multi-head layer's hyperparameters. The residual / norm / feed-forward
// scaffolding defaults ON; switching all three off leaves the bare
// softmax(QK/sqrt(d))V composition.
struct LayerConfig {
    std::size_t d = 64;
    std::size_t h = 4;
    std::size_t d_ff = 0;  // 0 = 4*d
    bool use_residual = true;
    bool use_norm = true;
    bool use_ffn = true;

    void validate() const;
    std::size_t d_head() const { return d / h; }
    std::size_t ff_dim() const { return d_ff ? d_ff : 4 * d; }
};

// Registers one layer's parameters under `prefix`:
//   {prefix}.h{i}.wa/.wb/.wc   per-head projections, d x d_head
//   {prefix}.mix               output mixer, (h*d_head) x d
//   {prefix}.ff.w1/.b1/.w2/.b2 when use_ffn
//   {prefix}.norm1.* / .norm2.* when use_norm
void add_attention_params(ParameterStore& store, const std::string& prefix,
                          const LayerConfig& cfg, std::uint64_t seed);

struct CoreOut {
    Var output;   // n_q x d_head
    Var weights;  // n_q x n_k attention weights
};

// softmax(A B^T / sqrt(d_head)) C on already-projected per-head tensors.
CoreOut attention_core(Tape& tape, Var a, Var b, Var c, const std::optional<Mask>& key_mask);

struct MultiHeadOut {
    Var output;
    std::vector<Var> head_weights;  // one weight matrix per head
};

// Full layer: per-head projected attention_core, concatenated and mixed,
// then the flagged scaffolding. When `per_head_a` is non-empty it must hold
// h tensors and head i projects per_head_a[i] instead of `a` (the gating
// hook); the residual path still uses `a`.
MultiHeadOut multi_head(Tape& tape, ParameterStore& store, const std::string& prefix,
                        const LayerConfig& cfg, Var a, Var b, Var c,
                        const std::optional<Mask>& key_mask,
                        const std::vector<Var>& per_head_a = {});

// multi_head with A = B = C = X.
MultiHeadOut self_attention(Tape& tape, ParameterStore& store, const std::string& prefix,
                            const LayerConfig& cfg, Var x, const std::optional<Mask>& mask);

// multi_head with queries X against keys/values Y.
MultiHeadOut guided_attention(Tape& tape, ParameterStore& store, const std::string& prefix,
                              const LayerConfig& cfg, Var x, Var y,
                              const std::optional<Mask>& y_mask);

}  // namespace sgt
