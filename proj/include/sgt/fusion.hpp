#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sgt/params.hpp"
#include "sgt/tape.hpp"

namespace sgt {

enum class DecoderKind { encode, weighted };

// Recurrent encoder weights under {prefix}.win and {prefix}.whid (d x d).
void add_encoder_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                        std::uint64_t seed);

struct EncodeOut {
    Var last;    // 1 x d, the state after the last valid row
    Var states;  // n x d per-position states; masked positions are zero rows
};

// E_t = relu(A_t Win + E_prev Whid) scanned over the valid rows of x in
// ascending order, starting from E_0 = 0.
EncodeOut encode_sequence(Tape& tape, ParameterStore& store, const std::string& prefix, Var x,
                          const std::optional<Mask>& mask);

// Alpha MLP weights under {prefix}.w1 ((n*d) x d), .b1, .w2 (d x n), .b2.
void add_alpha_params(ParameterStore& store, const std::string& prefix, std::size_t n,
                      std::size_t d, std::uint64_t seed);

// alpha = softmax(MLP(concat of encodings)): one hidden relu layer over the
// flattened state matrix, one logit per position, masked softmax. 1 x n.
Var attention_weights_alpha(Tape& tape, ParameterStore& store, const std::string& prefix,
                            Var states, const std::optional<Mask>& mask);

// Convex combination alpha * X -> 1 x d. Rejects alpha off the simplex by
// more than 1e-9.
Var weighted_fusion(Tape& tape, Var x, Var alpha);

// Per-stream decoder parameters: the encoder always, the alpha MLP only for
// the weighted path.
void add_decoder_params(ParameterStore& store, const std::string& prefix, std::size_t n,
                        std::size_t d, DecoderKind kind, std::uint64_t seed);

// One stream's fused representation F (1 x d): the final encoder state, or
// the alpha-weighted combination of the raw stream rows.
Var decode_stream(Tape& tape, ParameterStore& store, const std::string& prefix, Var stream,
                  const std::optional<Mask>& mask, DecoderKind kind);

// Final head weights under {prefix}.beta (1 x 2 logits), .w1/.w2 (d x d_z),
// .w3 (d_z x d_z), .cls (d_z x n_answers).
void add_fusion_head_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                            std::size_t d_z, std::size_t n_answers, std::uint64_t seed);

struct FusionHeadOut {
    Var logits;  // 1 x n_answers
    Var z;       // 1 x d_z
    Var beta;    // 1 x 2, softmax of the trainable pair
};

// z = (beta1 F1 W1 + beta2 F2 W2) W3, then the answer classifier.
FusionHeadOut final_projection(Tape& tape, ParameterStore& store, const std::string& prefix,
                               Var f1, Var f2);

}  // namespace sgt
