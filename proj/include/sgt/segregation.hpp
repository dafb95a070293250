#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgt/attention.hpp"
#include "sgt/params.hpp"
#include "sgt/tape.hpp"

namespace sgt {

struct GateOptions {
    // Test hook: adds a huge positive pre-activation so sigmoid saturates to
    // exactly 1.0 and the gated path reduces to the vanilla layer bitwise.
    bool force_open = false;
    // Inference-time binarization: gate entries become exactly 0 or 1. The
    // binarized gate is detached, so training must keep this unset.
    std::optional<double> hard_threshold;
};

// Telemetry across the gates of one forward pass.
struct GateStats {
    std::size_t applications = 0;  // gated positions in the architecture
    std::size_t entries = 0;
    double sum = 0.0;
    std::size_t lo = 0;  // entries < 0.1
    std::size_t hi = 0;  // entries > 0.9

    void observe(const Tensor& omega);
    void merge(const GateStats& other);
    double mean() const { return entries ? sum / static_cast<double>(entries) : 0.0; }
    double frac_lo() const { return entries ? static_cast<double>(lo) / entries : 0.0; }
    double frac_hi() const { return entries ? static_cast<double>(hi) / entries : 0.0; }
};

// Registers `heads` gate triples under {prefix}.g{i}.ua/.ub/.uab
// (ua, ub: d x d_g; uab: d_g x d).
void add_gate_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                     std::size_t d_g, std::size_t heads, std::uint64_t seed);

// omega = sigmoid(relu(A Ua + pool(context) Ub) Uab), one coefficient per
// row and feature of A. The context is mean-pooled over its valid rows.
Var gate_coefficients(Tape& tape, ParameterStore& store, const std::string& gate_prefix,
                      Var a, Var context, const std::optional<Mask>& context_mask,
                      const GateOptions& opts = {}, GateStats* stats = nullptr);

// h elementwise-gated copies of A, one per head. Count must equal h.
std::vector<Var> segregate(Tape& tape, Var a, const std::vector<Var>& omegas, std::size_t h);

struct SegLayerOut {
    Var output;
    std::vector<Var> omegas;  // per-head gates actually applied
};

// Segregated multi-head layer: head i attends ((omega_i * A) Wa_i, B Wb_i,
// C Wc_i) with omega_i derived from A and `gate_context`. Expects attention
// params under `prefix` and gate triples under {prefix}.g{i}.
SegLayerOut seg_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, Var b, Var c, Var gate_context,
                      const std::optional<Mask>& key_mask,
                      const std::optional<Mask>& context_mask,
                      const GateOptions& opts = {}, GateStats* stats = nullptr);

// Coordinated segregation: the key/value tensor doubles as the gate context.
SegLayerOut cst_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, Var b, Var c,
                      const std::optional<Mask>& mask, const GateOptions& opts = {},
                      GateStats* stats = nullptr);

// Self-segregation: cst_layer with B = C = A.
SegLayerOut sst_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, const std::optional<Mask>& mask,
                      const GateOptions& opts = {}, GateStats* stats = nullptr);

enum class StackKind { vanilla, cset, eset };

// Registers an m-layer self-attention stack under {prefix}.l{k}. cset adds
// per-layer gate triples, eset one end gate triple ({prefix}.end.g0), and
// vanilla none.
void add_stack_params(ParameterStore& store, const std::string& prefix, const LayerConfig& cfg,
                      std::size_t m, StackKind kind, std::uint64_t seed);

struct StackOut {
    Var output;
    GateStats stats;
};

// m segregated self-attention layers; every layer gates its own input, with
// the coordinator (when given) as the gate context. stats.applications = m.
StackOut stack_cset(Tape& tape, ParameterStore& store, const std::string& prefix,
                    const LayerConfig& cfg, std::size_t m, Var x0,
                    const std::optional<Var>& coordinator, const std::optional<Mask>& x_mask,
                    const std::optional<Mask>& coord_mask, const GateOptions& opts = {});

// m vanilla layers, then one gate on the final representation (context =
// coordinator when given, else the representation itself); output is the
// gated representation. stats.applications = 1.
StackOut stack_eset(Tape& tape, ParameterStore& store, const std::string& prefix,
                    const LayerConfig& cfg, std::size_t m, Var x0,
                    const std::optional<Var>& coordinator, const std::optional<Mask>& x_mask,
                    const std::optional<Mask>& coord_mask, const GateOptions& opts = {});

// m plain self-attention layers, no gates. stats.applications = 0.
StackOut stack_vanilla(Tape& tape, ParameterStore& store, const std::string& prefix,
                       const LayerConfig& cfg, std::size_t m, Var x0,
                       const std::optional<Mask>& x_mask);

}  // namespace sgt
