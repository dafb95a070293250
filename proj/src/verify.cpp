#include "sgt/verify.hpp"

#include <cmath>
#include <vector>

#include "sgt/attention.hpp"
#include "sgt/init.hpp"
#include "sgt/model.hpp"
#include "sgt/random.hpp"
#include "sgt/reference.hpp"
#include "sgt/segregation.hpp"
#include "sgt/tape.hpp"

namespace sgt {
namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(shape);
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.normal();
    return t;
}

ref::Vec to_vec(const Tensor& t) { return ref::Vec(t.data(), t.data() + t.size()); }

std::vector<std::uint8_t> random_flags(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> flags(n);
    for (auto& f : flags) f = rng.uniform() < 0.35 ? 0 : 1;
    bool any = false;
    for (auto f : flags) any = any || f != 0;
    if (!any) flags[rng.index(n)] = 1;
    return flags;
}

double max_abs_diff(const Tensor& got, const ref::Vec& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::fabs(got.data()[i] - want[i]));
    return worst;
}

struct CaseDims {
    std::size_t h, dh, d, nq, nk;
};

CaseDims draw_dims(std::size_t max_dim, Rng& rng) {
    CaseDims c;
    c.h = max_dim >= 2 && rng.uniform() < 0.5 ? 2 : 1;
    c.dh = 1 + rng.index(max_dim / c.h);
    c.d = c.h * c.dh;
    c.nq = 1 + rng.index(4);
    c.nk = 1 + rng.index(4);
    return c;
}

}  // namespace

OracleReport oracle_suite(std::size_t cases, std::size_t max_dim, std::uint64_t seed, double tol) {
    Rng rng(seed);
    OracleReport report;
    report.tol = tol;

    auto record = [&](double err, const std::string& label) {
        if (err > report.max_err || report.worst.empty()) {
            report.max_err = err;
            report.worst = label;
        }
    };
    auto label = [](const char* kernel, std::size_t i, const CaseDims& c) {
        return std::string(kernel) + " case " + std::to_string(i) + " (d=" + std::to_string(c.d) +
               " h=" + std::to_string(c.h) + " nq=" + std::to_string(c.nq) +
               " nk=" + std::to_string(c.nk) + ")";
    };

    for (std::size_t i = 0; i < cases; ++i) {
        CaseDims dims = draw_dims(max_dim, rng);
        std::vector<std::uint8_t> flags = random_flags(dims.nk, rng);
        Mask mask({dims.nk}, flags);

        // Bare attention core on already-projected per-head tensors.
        {
            Tensor a = random_tensor({dims.nq, dims.dh}, rng);
            Tensor b = random_tensor({dims.nk, dims.dh}, rng);
            Tensor c = random_tensor({dims.nk, dims.dh}, rng);
            Tape tape;
            CoreOut out = attention_core(tape, tape.constant(a), tape.constant(b),
                                         tape.constant(c), mask);
            ref::Vec want = ref::attention_core(to_vec(a), to_vec(b), to_vec(c), dims.nq, dims.nk,
                                                dims.dh, flags);
            record(max_abs_diff(tape.value(out.output), want), label("attention_core", i, dims));
        }

        LayerConfig cfg;
        cfg.d = dims.d;
        cfg.h = dims.h;
        cfg.use_residual = false;
        cfg.use_norm = false;
        cfg.use_ffn = false;

        Tensor a = random_tensor({dims.nq, dims.d}, rng);
        Tensor b = random_tensor({dims.nk, dims.d}, rng);
        Tensor c = random_tensor({dims.nk, dims.d}, rng);

        ParameterStore store;
        ref::MultiHeadWeights attn;
        for (std::size_t head = 0; head < dims.h; ++head) {
            ref::HeadWeights hw;
            Tensor wa = random_tensor({dims.d, dims.dh}, rng);
            Tensor wb = random_tensor({dims.d, dims.dh}, rng);
            Tensor wc = random_tensor({dims.d, dims.dh}, rng);
            const std::string hp = "L.h" + std::to_string(head);
            store.add(hp + ".wa", wa);
            store.add(hp + ".wb", wb);
            store.add(hp + ".wc", wc);
            hw.wa = to_vec(wa);
            hw.wb = to_vec(wb);
            hw.wc = to_vec(wc);
            attn.heads.push_back(std::move(hw));
        }
        Tensor mix = random_tensor({dims.h * dims.dh, dims.d}, rng);
        store.add("L.mix", mix);
        attn.mix = to_vec(mix);

        {
            Tape tape;
            MultiHeadOut out = multi_head(tape, store, "L", cfg, tape.constant(a),
                                          tape.constant(b), tape.constant(c), mask);
            ref::Vec want = ref::multi_head(to_vec(a), to_vec(b), to_vec(c), dims.nq, dims.nk,
                                            dims.d, attn, flags);
            record(max_abs_diff(tape.value(out.output), want), label("multi_head", i, dims));
        }

        {
            std::vector<ref::GateWeights> gates;
            for (std::size_t head = 0; head < dims.h; ++head) {
                ref::GateWeights gw;
                Tensor ua = random_tensor({dims.d, dims.d}, rng);
                Tensor ub = random_tensor({dims.d, dims.d}, rng);
                Tensor uab = random_tensor({dims.d, dims.d}, rng);
                const std::string gp = "L.g" + std::to_string(head);
                store.add(gp + ".ua", ua);
                store.add(gp + ".ub", ub);
                store.add(gp + ".uab", uab);
                gw.u_a = to_vec(ua);
                gw.u_b = to_vec(ub);
                gw.u_ab = to_vec(uab);
                gates.push_back(std::move(gw));
            }
            Tape tape;
            SegLayerOut out = cst_layer(tape, store, "L", cfg, tape.constant(a), tape.constant(b),
                                        tape.constant(c), mask);
            ref::Vec want = ref::cst_layer(to_vec(a), to_vec(b), to_vec(c), dims.nq, dims.nk,
                                           dims.d, dims.d, attn, gates, flags);
            record(max_abs_diff(tape.value(out.output), want), label("cst_layer", i, dims));
        }
    }

    report.cases = cases;
    report.pass = report.max_err <= tol;
    return report;
}

namespace {

// A fixed random linear functional of the output. Keeps the loss O(1) so the
// central difference stays above rounding noise, unlike a squared sum whose
// magnitude grows with width.
Var linear_loss(Tape& tape, Var y, std::uint64_t seed) {
    Rng rng(seed);
    Tensor r(tape.value(y).shape());
    double* p = r.mutable_data();
    for (std::size_t i = 0; i < r.size(); ++i) p[i] = 0.05 * rng.normal();
    return tape.sum_all(tape.mul(y, tape.constant(r)));
}

// Unit-normal data inputs. Xavier-scale inputs leave the gate parameters
// with gradients near the finite-difference noise floor at h = 1e-5; the
// input scale enters the gate chain twice, so std-1 rows lift them clear.
void add_data_param(ParameterStore& store, const std::string& name, Shape shape,
                    std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(shape);
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.normal();
    store.add(name, std::move(t));
}

ModelConfig tiny_model_config(std::uint64_t seed) {
    ModelConfig mc;
    mc.d_model = 8;
    mc.h = 2;
    mc.m = 2;
    mc.d_img = 4;
    mc.d_emb = 4;
    mc.d_z = 8;
    mc.n_answers = 3;
    mc.vocab = 6;
    mc.max_regions = 3;
    mc.max_tokens = 2;
    mc.seed = seed;
    return mc;
}

}  // namespace

std::vector<GradSection> gradient_sections(std::uint64_t seed) {
    LayerConfig layer;
    layer.d = 16;
    layer.h = 2;

    std::vector<GradSection> sections;

    sections.push_back({"attention_layer", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_attention_params(store, "L", layer, seed);
        add_data_param(store, "x", {6, layer.d}, seed + 1);
        Mask mask = Mask::prefix(6, 5);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var y = self_attention(tape, ps, "L", layer, tape.parameter(ps, "x"), mask).output;
            return linear_loss(tape, y, seed + 2);
        };
        return grad_check(fn, store, 90, h, tol, seed + 3, factor);
    }});

    sections.push_back({"sst_layer", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_attention_params(store, "L", layer, seed + 4);
        add_gate_params(store, "L", layer.d, layer.d, layer.h, seed + 4);
        add_data_param(store, "x", {6, layer.d}, seed + 5);
        Mask mask = Mask::prefix(6, 4);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var y = sst_layer(tape, ps, "L", layer, tape.parameter(ps, "x"), mask).output;
            return linear_loss(tape, y, seed + 6);
        };
        return grad_check(fn, store, 90, h, tol, seed + 7, factor);
    }});

    sections.push_back({"cst_layer", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_attention_params(store, "L", layer, seed + 8);
        add_gate_params(store, "L", layer.d, layer.d, layer.h, seed + 8);
        add_data_param(store, "a", {5, layer.d}, seed + 9);
        add_data_param(store, "b", {7, layer.d}, seed + 10);
        Mask mask = Mask::prefix(7, 6);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var b = tape.parameter(ps, "b");
            Var y = cst_layer(tape, ps, "L", layer, tape.parameter(ps, "a"), b, b, mask).output;
            return linear_loss(tape, y, seed + 11);
        };
        return grad_check(fn, store, 90, h, tol, seed + 12, factor);
    }});

    sections.push_back({"stack_cset", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_stack_params(store, "S", layer, 2, StackKind::cset, seed + 13);
        add_data_param(store, "x", {6, layer.d}, seed + 14);
        Mask mask = Mask::prefix(6, 5);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var y = stack_cset(tape, ps, "S", layer, 2, tape.parameter(ps, "x"), std::nullopt,
                               mask, std::nullopt)
                        .output;
            return linear_loss(tape, y, seed + 15);
        };
        return grad_check(fn, store, 90, h, tol, seed + 16, factor);
    }});

    sections.push_back({"stack_eset", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_stack_params(store, "S", layer, 2, StackKind::eset, seed + 17);
        add_data_param(store, "x", {6, layer.d}, seed + 18);
        Mask mask = Mask::prefix(6, 5);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var y = stack_eset(tape, ps, "S", layer, 2, tape.parameter(ps, "x"), std::nullopt,
                               mask, std::nullopt)
                        .output;
            return linear_loss(tape, y, seed + 19);
        };
        return grad_check(fn, store, 90, h, tol, seed + 20, factor);
    }});

    sections.push_back({"decoder_encode", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_decoder_params(store, "D", 8, layer.d, DecoderKind::encode, seed + 21);
        add_data_param(store, "x", {8, layer.d}, seed + 22);
        Mask mask = Mask::prefix(8, 6);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var f = decode_stream(tape, ps, "D", tape.parameter(ps, "x"), mask,
                                  DecoderKind::encode);
            return linear_loss(tape, f, seed + 23);
        };
        return grad_check(fn, store, 80, h, tol, seed + 24, factor);
    }});

    sections.push_back({"decoder_weighted", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_decoder_params(store, "D", 8, layer.d, DecoderKind::weighted, seed + 25);
        add_data_param(store, "x", {8, layer.d}, seed + 26);
        Mask mask = Mask::prefix(8, 6);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            Var f = decode_stream(tape, ps, "D", tape.parameter(ps, "x"), mask,
                                  DecoderKind::weighted);
            return linear_loss(tape, f, seed + 27);
        };
        return grad_check(fn, store, 80, h, tol, seed + 28, factor);
    }});

    sections.push_back({"fusion_head", [=](double h, double tol, double factor) {
        ParameterStore store;
        add_fusion_head_params(store, "H", layer.d, 16, 8, seed + 29);
        add_data_param(store, "f1", {1, layer.d}, seed + 30);
        add_data_param(store, "f2", {1, layer.d}, seed + 31);
        auto fn = [&](Tape& tape, ParameterStore& ps) {
            FusionHeadOut out = final_projection(tape, ps, "H", tape.parameter(ps, "f1"),
                                                 tape.parameter(ps, "f2"));
            return tape.cross_entropy_logits(out.logits, 3);
        };
        return grad_check(fn, store, 80, h, tol, seed + 32, factor);
    }});

    struct ModelCase {
        const char* name;
        Variant variant;
        StackKind stacking;
    };
    for (ModelCase mc : {ModelCase{"model_sst_cset", Variant::sst, StackKind::cset},
                         ModelCase{"model_cst_eset", Variant::cst, StackKind::eset}}) {
        sections.push_back({mc.name, [=](double h, double tol, double factor) {
            ModelConfig config = tiny_model_config(seed + 33);
            config.variant = mc.variant;
            config.stacking = mc.stacking;
            Model model = build_model(config);
            Rng rng(seed + 34);
            Tensor regions = random_tensor({config.max_regions, config.d_img}, rng);
            Mask rmask = Mask::prefix(config.max_regions, 2);
            Mask tmask = Mask::prefix(config.max_tokens, 2);
            std::vector<std::size_t> ids = {3, 1};
            auto fn = [&](Tape& tape, ParameterStore&) {
                ForwardOut fwd = model_forward(tape, model, regions, rmask, ids, tmask);
                return tape.cross_entropy_logits(fwd.logits, 2);
            };
            return grad_check(fn, model.store, 120, h, tol, seed + 35, factor);
        }});
    }

    return sections;
}

}  // namespace sgt
