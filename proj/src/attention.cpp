#include "sgt/attention.hpp"

#include <cmath>

#include "sgt/errors.hpp"
#include "sgt/init.hpp"

namespace sgt {

void LayerConfig::validate() const {
    if (d == 0 || h == 0) throw ConfigError("layer d and h must be positive");
    if (d % h != 0) {
        throw ConfigError("d=" + std::to_string(d) + " not divisible by h=" + std::to_string(h));
    }
}

void add_attention_params(ParameterStore& store, const std::string& prefix,
                          const LayerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t dh = cfg.d_head();
    for (std::size_t i = 0; i < cfg.h; ++i) {
        const std::string head = prefix + ".h" + std::to_string(i);
        add_xavier(store, head + ".wa", {cfg.d, dh}, seed);
        add_xavier(store, head + ".wb", {cfg.d, dh}, seed);
        add_xavier(store, head + ".wc", {cfg.d, dh}, seed);
    }
    add_xavier(store, prefix + ".mix", {cfg.h * dh, cfg.d}, seed);
    if (cfg.use_ffn) {
        add_xavier(store, prefix + ".ff.w1", {cfg.d, cfg.ff_dim()}, seed);
        add_zeros(store, prefix + ".ff.b1", {cfg.ff_dim()});
        add_xavier(store, prefix + ".ff.w2", {cfg.ff_dim(), cfg.d}, seed);
        add_zeros(store, prefix + ".ff.b2", {cfg.d});
    }
    if (cfg.use_norm) {
        add_ones(store, prefix + ".norm1.gain", {cfg.d});
        add_zeros(store, prefix + ".norm1.bias", {cfg.d});
        add_ones(store, prefix + ".norm2.gain", {cfg.d});
        add_zeros(store, prefix + ".norm2.bias", {cfg.d});
    }
}

CoreOut attention_core(Tape& tape, Var a, Var b, Var c, const std::optional<Mask>& key_mask) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    const Tensor& cv = tape.value(c);
    if (av.rank() != 2 || bv.rank() != 2 || cv.rank() != 2 || av.cols() != bv.cols() ||
        bv.rows() != cv.rows()) {
        throw DimensionError("attention_core shapes: A " + shape_str(av.shape()) + ", B " +
                             shape_str(bv.shape()) + ", C " + shape_str(cv.shape()));
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(av.cols()));
    Var logits = tape.scale(tape.matmul(a, tape.transpose(b)), inv_sqrt);
    Var weights = tape.softmax(logits, 1, key_mask);
    return CoreOut{tape.matmul(weights, c), weights};
}

MultiHeadOut multi_head(Tape& tape, ParameterStore& store, const std::string& prefix,
                        const LayerConfig& cfg, Var a, Var b, Var c,
                        const std::optional<Mask>& key_mask,
                        const std::vector<Var>& per_head_a) {
    cfg.validate();
    if (!per_head_a.empty() && per_head_a.size() != cfg.h) {
        throw ConfigError("per_head_a carries " + std::to_string(per_head_a.size()) +
                          " tensors for h=" + std::to_string(cfg.h));
    }

    MultiHeadOut out;
    std::vector<Var> heads;
    heads.reserve(cfg.h);
    for (std::size_t i = 0; i < cfg.h; ++i) {
        const std::string head = prefix + ".h" + std::to_string(i);
        Var ai = per_head_a.empty() ? a : per_head_a[i];
        Var pa = tape.matmul(ai, tape.parameter(store, head + ".wa"));
        Var pb = tape.matmul(b, tape.parameter(store, head + ".wb"));
        Var pc = tape.matmul(c, tape.parameter(store, head + ".wc"));
        CoreOut core = attention_core(tape, pa, pb, pc, key_mask);
        heads.push_back(core.output);
        out.head_weights.push_back(core.weights);
    }
    Var x = tape.matmul(cfg.h == 1 ? heads.front() : tape.concat(heads, 1),
                        tape.parameter(store, prefix + ".mix"));

    if (cfg.use_residual) x = tape.add(a, x);
    if (cfg.use_norm) {
        x = tape.layer_norm(x, tape.parameter(store, prefix + ".norm1.gain"),
                            tape.parameter(store, prefix + ".norm1.bias"));
    }
    if (cfg.use_ffn) {
        Var hidden = tape.relu(tape.add(tape.matmul(x, tape.parameter(store, prefix + ".ff.w1")),
                                        tape.parameter(store, prefix + ".ff.b1")));
        Var ff = tape.add(tape.matmul(hidden, tape.parameter(store, prefix + ".ff.w2")),
                          tape.parameter(store, prefix + ".ff.b2"));
        x = cfg.use_residual ? tape.add(x, ff) : ff;
        if (cfg.use_norm) {
            x = tape.layer_norm(x, tape.parameter(store, prefix + ".norm2.gain"),
                                tape.parameter(store, prefix + ".norm2.bias"));
        }
    }
    out.output = x;
    return out;
}

MultiHeadOut self_attention(Tape& tape, ParameterStore& store, const std::string& prefix,
                            const LayerConfig& cfg, Var x, const std::optional<Mask>& mask) {
    return multi_head(tape, store, prefix, cfg, x, x, x, mask);
}

MultiHeadOut guided_attention(Tape& tape, ParameterStore& store, const std::string& prefix,
                              const LayerConfig& cfg, Var x, Var y,
                              const std::optional<Mask>& y_mask) {
    return multi_head(tape, store, prefix, cfg, x, y, y, y_mask);
}

}  // namespace sgt
