#include "sgt/fusion.hpp"

#include <cmath>

#include "sgt/errors.hpp"
#include "sgt/init.hpp"

namespace sgt {

void add_encoder_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                        std::uint64_t seed) {
    add_xavier(store, prefix + ".win", {d, d}, seed);
    add_xavier(store, prefix + ".whid", {d, d}, seed);
}

EncodeOut encode_sequence(Tape& tape, ParameterStore& store, const std::string& prefix, Var x,
                          const std::optional<Mask>& mask) {
    const Tensor& xv = tape.value(x);
    if (xv.rank() != 2) {
        throw ContractError("encode_sequence needs a rank-2 sequence, got " + shape_str(xv.shape()));
    }
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    if (mask && (mask->rank() != 1 || mask->size() != n)) {
        throw MaskError("encode_sequence mask does not cover " + std::to_string(n) + " rows");
    }
    Var win = tape.parameter(store, prefix + ".win");
    Var whid = tape.parameter(store, prefix + ".whid");

    Var zero_row = tape.constant(Tensor::zeros({1, d}));
    Var state = zero_row;
    std::vector<Var> rows;
    rows.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (mask && !mask->valid(t)) {
            rows.push_back(zero_row);
            continue;
        }
        Var at = tape.slice(x, 0, t, t + 1);
        state = tape.relu(tape.add(tape.matmul(at, win), tape.matmul(state, whid)));
        rows.push_back(state);
    }
    return EncodeOut{state, n == 1 ? rows.front() : tape.concat(rows, 0)};
}

void add_alpha_params(ParameterStore& store, const std::string& prefix, std::size_t n,
                      std::size_t d, std::uint64_t seed) {
    add_xavier(store, prefix + ".w1", {n * d, d}, seed);
    add_zeros(store, prefix + ".b1", {d});
    add_xavier(store, prefix + ".w2", {d, n}, seed);
    add_zeros(store, prefix + ".b2", {n});
}

Var attention_weights_alpha(Tape& tape, ParameterStore& store, const std::string& prefix,
                            Var states, const std::optional<Mask>& mask) {
    const Tensor& sv = tape.value(states);
    if (sv.rank() != 2) throw DimensionError("alpha MLP expects rank-2 states");
    const std::size_t n = sv.shape()[0], d = sv.shape()[1];
    Var flat = tape.reshape(states, {1, n * d});
    Var hidden = tape.relu(tape.add(tape.matmul(flat, tape.parameter(store, prefix + ".w1")),
                                    tape.parameter(store, prefix + ".b1")));
    Var logits = tape.add(tape.matmul(hidden, tape.parameter(store, prefix + ".w2")),
                          tape.parameter(store, prefix + ".b2"));
    return tape.softmax(logits, 1, mask);
}

Var weighted_fusion(Tape& tape, Var x, Var alpha) {
    const Tensor& xv = tape.value(x);
    const Tensor& av = tape.value(alpha);
    if (xv.rank() != 2 || av.rank() != 2 || av.shape()[0] != 1 || av.shape()[1] != xv.shape()[0]) {
        throw DimensionError("weighted_fusion: alpha " + shape_str(av.shape()) + " vs x " +
                             shape_str(xv.shape()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av.data()[i] < -1e-9) throw ContractError("alpha has a negative weight");
        sum += av.data()[i];
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ContractError("alpha sums to " + std::to_string(sum) + ", not 1");
    }
    return tape.matmul(alpha, x);
}

void add_decoder_params(ParameterStore& store, const std::string& prefix, std::size_t n,
                        std::size_t d, DecoderKind kind, std::uint64_t seed) {
    add_encoder_params(store, prefix + ".enc", d, seed);
    if (kind == DecoderKind::weighted) add_alpha_params(store, prefix + ".alpha", n, d, seed);
}

Var decode_stream(Tape& tape, ParameterStore& store, const std::string& prefix, Var stream,
                  const std::optional<Mask>& mask, DecoderKind kind) {
    EncodeOut enc = encode_sequence(tape, store, prefix + ".enc", stream, mask);
    if (kind == DecoderKind::encode) return enc.last;
    Var alpha = attention_weights_alpha(tape, store, prefix + ".alpha", enc.states, mask);
    return weighted_fusion(tape, stream, alpha);
}

void add_fusion_head_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                            std::size_t d_z, std::size_t n_answers, std::uint64_t seed) {
    add_zeros(store, prefix + ".beta", {1, 2});
    add_xavier(store, prefix + ".w1", {d, d_z}, seed);
    add_xavier(store, prefix + ".w2", {d, d_z}, seed);
    add_xavier(store, prefix + ".w3", {d_z, d_z}, seed);
    add_lecun(store, prefix + ".cls", {d_z, n_answers}, seed);
}

FusionHeadOut final_projection(Tape& tape, ParameterStore& store, const std::string& prefix,
                               Var f1, Var f2) {
    const Tensor& v1 = tape.value(f1);
    const Tensor& v2 = tape.value(f2);
    if (v1.rank() != 2 || v1.shape()[0] != 1 || !v1.same_shape(v2)) {
        throw DimensionError("final_projection expects two 1 x d rows, got " +
                             shape_str(v1.shape()) + " and " + shape_str(v2.shape()));
    }
    Var beta = tape.softmax(tape.parameter(store, prefix + ".beta"), 1);
    Var b1 = tape.slice(beta, 1, 0, 1);
    Var b2 = tape.slice(beta, 1, 1, 2);
    Var mixed = tape.add(tape.mul(tape.matmul(f1, tape.parameter(store, prefix + ".w1")), b1),
                         tape.mul(tape.matmul(f2, tape.parameter(store, prefix + ".w2")), b2));
    Var z = tape.matmul(mixed, tape.parameter(store, prefix + ".w3"));
    Var logits = tape.matmul(z, tape.parameter(store, prefix + ".cls"));
    return FusionHeadOut{logits, z, beta};
}

}  // namespace sgt
