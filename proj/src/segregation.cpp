#include "sgt/segregation.hpp"

#include "sgt/errors.hpp"
#include "sgt/init.hpp"

namespace sgt {

void GateStats::observe(const Tensor& omega) {
    const double* p = omega.data();
    for (std::size_t i = 0; i < omega.size(); ++i) {
        sum += p[i];
        lo += (p[i] < 0.1);
        hi += (p[i] > 0.9);
    }
    entries += omega.size();
}

void GateStats::merge(const GateStats& other) {
    applications += other.applications;
    entries += other.entries;
    sum += other.sum;
    lo += other.lo;
    hi += other.hi;
}

void add_gate_params(ParameterStore& store, const std::string& prefix, std::size_t d,
                     std::size_t d_g, std::size_t heads, std::uint64_t seed) {
    for (std::size_t i = 0; i < heads; ++i) {
        const std::string gate = prefix + ".g" + std::to_string(i);
        add_xavier(store, gate + ".ua", {d, d_g}, seed);
        add_xavier(store, gate + ".ub", {d, d_g}, seed);
        add_xavier(store, gate + ".uab", {d_g, d}, seed);
    }
}

Var gate_coefficients(Tape& tape, ParameterStore& store, const std::string& gate_prefix,
                      Var a, Var context, const std::optional<Mask>& context_mask,
                      const GateOptions& opts, GateStats* stats) {
    const Tensor& av = tape.value(a);
    const Tensor& cv = tape.value(context);
    if (av.rank() != 2 || cv.rank() != 2 || av.cols() != cv.cols()) {
        throw DimensionError("gate inputs: A " + shape_str(av.shape()) + " vs context " +
                             shape_str(cv.shape()));
    }
    Var pooled = tape.masked_mean_rows(
        context, context_mask ? *context_mask : Mask::full(cv.rows()));
    Var hidden = tape.relu(tape.add(tape.matmul(a, tape.parameter(store, gate_prefix + ".ua")),
                                    tape.matmul(pooled, tape.parameter(store, gate_prefix + ".ub"))));
    Var pre = tape.matmul(hidden, tape.parameter(store, gate_prefix + ".uab"));
    if (opts.force_open) pre = tape.add(pre, tape.constant(Tensor::scalar(1e9)));
    Var omega = tape.sigmoid(pre);
    if (opts.hard_threshold) {
        const Tensor& soft = tape.value(omega);
        Tensor hard(soft.shape());
        double* p = hard.mutable_data();
        const double* s = soft.data();
        for (std::size_t i = 0; i < soft.size(); ++i) p[i] = s[i] > *opts.hard_threshold ? 1.0 : 0.0;
        omega = tape.constant(std::move(hard));
    }
    if (stats) stats->observe(tape.value(omega));
    return omega;
}

std::vector<Var> segregate(Tape& tape, Var a, const std::vector<Var>& omegas, std::size_t h) {
    if (omegas.size() != h) {
        throw ConfigError("segregate got " + std::to_string(omegas.size()) + " gates for h=" +
                          std::to_string(h));
    }
    std::vector<Var> gated;
    gated.reserve(h);
    for (Var omega : omegas) gated.push_back(tape.mul(omega, a));
    return gated;
}

SegLayerOut seg_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, Var b, Var c, Var gate_context,
                      const std::optional<Mask>& key_mask,
                      const std::optional<Mask>& context_mask,
                      const GateOptions& opts, GateStats* stats) {
    cfg.validate();
    SegLayerOut out;
    for (std::size_t i = 0; i < cfg.h; ++i) {
        out.omegas.push_back(gate_coefficients(tape, store,
                                               prefix + ".g" + std::to_string(i), a,
                                               gate_context, context_mask, opts, stats));
    }
    if (stats) stats->applications += 1;
    std::vector<Var> gated = segregate(tape, a, out.omegas, cfg.h);
    out.output = multi_head(tape, store, prefix, cfg, a, b, c, key_mask, gated).output;
    return out;
}

SegLayerOut cst_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, Var b, Var c,
                      const std::optional<Mask>& mask, const GateOptions& opts,
                      GateStats* stats) {
    return seg_layer(tape, store, prefix, cfg, a, b, c, b, mask, mask, opts, stats);
}

SegLayerOut sst_layer(Tape& tape, ParameterStore& store, const std::string& prefix,
                      const LayerConfig& cfg, Var a, const std::optional<Mask>& mask,
                      const GateOptions& opts, GateStats* stats) {
    return cst_layer(tape, store, prefix, cfg, a, a, a, mask, opts, stats);
}

namespace {

std::string layer_prefix(const std::string& prefix, std::size_t k) {
    return prefix + ".l" + std::to_string(k);
}

}  // namespace

void add_stack_params(ParameterStore& store, const std::string& prefix, const LayerConfig& cfg,
                      std::size_t m, StackKind kind, std::uint64_t seed) {
    if (m == 0) throw ConfigError("stack depth must be at least 1");
    for (std::size_t k = 0; k < m; ++k) {
        add_attention_params(store, layer_prefix(prefix, k), cfg, seed);
        if (kind == StackKind::cset) {
            add_gate_params(store, layer_prefix(prefix, k), cfg.d, cfg.d, cfg.h, seed);
        }
    }
    if (kind == StackKind::eset) {
        add_gate_params(store, prefix + ".end", cfg.d, cfg.d, 1, seed);
    }
}

StackOut stack_cset(Tape& tape, ParameterStore& store, const std::string& prefix,
                    const LayerConfig& cfg, std::size_t m, Var x0,
                    const std::optional<Var>& coordinator, const std::optional<Mask>& x_mask,
                    const std::optional<Mask>& coord_mask, const GateOptions& opts) {
    if (m == 0) throw ConfigError("stack depth must be at least 1");
    StackOut out;
    Var x = x0;
    for (std::size_t k = 0; k < m; ++k) {
        Var ctx = coordinator ? *coordinator : x;
        const std::optional<Mask>& ctx_mask = coordinator ? coord_mask : x_mask;
        x = seg_layer(tape, store, layer_prefix(prefix, k), cfg, x, x, x, ctx, x_mask,
                      ctx_mask, opts, &out.stats)
                .output;
    }
    out.output = x;
    return out;
}

StackOut stack_eset(Tape& tape, ParameterStore& store, const std::string& prefix,
                    const LayerConfig& cfg, std::size_t m, Var x0,
                    const std::optional<Var>& coordinator, const std::optional<Mask>& x_mask,
                    const std::optional<Mask>& coord_mask, const GateOptions& opts) {
    if (m == 0) throw ConfigError("stack depth must be at least 1");
    StackOut out;
    Var x = x0;
    for (std::size_t k = 0; k < m; ++k) {
        x = self_attention(tape, store, layer_prefix(prefix, k), cfg, x, x_mask).output;
    }
    Var ctx = coordinator ? *coordinator : x;
    const std::optional<Mask>& ctx_mask = coordinator ? coord_mask : x_mask;
    Var omega = gate_coefficients(tape, store, prefix + ".end.g0", x, ctx, ctx_mask, opts,
                                  &out.stats);
    out.stats.applications += 1;
    out.output = tape.mul(omega, x);
    return out;
}

StackOut stack_vanilla(Tape& tape, ParameterStore& store, const std::string& prefix,
                       const LayerConfig& cfg, std::size_t m, Var x0,
                       const std::optional<Mask>& x_mask) {
    if (m == 0) throw ConfigError("stack depth must be at least 1");
    StackOut out;
    Var x = x0;
    for (std::size_t k = 0; k < m; ++k) {
        x = self_attention(tape, store, layer_prefix(prefix, k), cfg, x, x_mask).output;
    }
    out.output = x;
    return out;
}

}  // namespace sgt
