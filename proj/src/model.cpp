#include "sgt/model.hpp"

#include <cstring>

#include "sgt/errors.hpp"
#include "sgt/init.hpp"

namespace sgt {

void ModelConfig::validate() const {
    layer().validate();
    if (m == 0) throw ConfigError("stack depth m must be positive");
    if (d_img == 0 || d_emb == 0 || d_z == 0) {
        throw ConfigError("d_img, d_emb and d_z must be positive");
    }
    if (n_answers < 2) throw ConfigError("need at least two answer classes");
    if (vocab < 2) throw ConfigError("vocabulary must cover pad plus at least one token");
    if (max_regions == 0 || max_tokens == 0) {
        throw ConfigError("max_regions and max_tokens must be positive");
    }
}

LayerConfig ModelConfig::layer() const {
    LayerConfig lc;
    lc.d = d_model;
    lc.h = h;
    return lc;
}

namespace {

StackKind stream_kind(const ModelConfig& cfg) {
    return cfg.variant == Variant::vanilla ? StackKind::vanilla : cfg.stacking;
}

}  // namespace

Model build_model(const ModelConfig& cfg) {
    cfg.validate();
    Model model;
    model.cfg = cfg;
    ParameterStore& store = model.store;

    add_xavier(store, "embed.table", {cfg.vocab, cfg.d_emb}, cfg.seed);
    add_xavier(store, "embed.proj", {cfg.d_emb, cfg.d_model}, cfg.seed);
    add_xavier(store, "img.proj", {cfg.d_img, cfg.d_model}, cfg.seed);

    const StackKind kind = stream_kind(cfg);
    add_stack_params(store, "qstream", cfg.layer(), cfg.m, kind, cfg.seed);
    add_stack_params(store, "istream", cfg.layer(), cfg.m, kind, cfg.seed);

    add_decoder_params(store, "dec.q", cfg.max_tokens, cfg.d_model, cfg.decoder, cfg.seed);
    add_decoder_params(store, "dec.i", cfg.max_regions, cfg.d_model, cfg.decoder, cfg.seed);
    add_fusion_head_params(store, "head", cfg.d_model, cfg.d_z, cfg.n_answers, cfg.seed);
    return model;
}

Model build_sst_model(ModelConfig cfg) {
    cfg.variant = Variant::sst;
    return build_model(cfg);
}

Model build_cst_model(ModelConfig cfg) {
    cfg.variant = Variant::cst;
    return build_model(cfg);
}

namespace {

StackOut run_stack(Tape& tape, Model& model, const std::string& prefix, Var x0,
                   const std::optional<Var>& coordinator, const std::optional<Mask>& x_mask,
                   const std::optional<Mask>& coord_mask, const GateOptions& opts) {
    const ModelConfig& cfg = model.cfg;
    switch (stream_kind(cfg)) {
        case StackKind::vanilla:
            return stack_vanilla(tape, model.store, prefix, cfg.layer(), cfg.m, x0, x_mask);
        case StackKind::cset:
            return stack_cset(tape, model.store, prefix, cfg.layer(), cfg.m, x0, coordinator,
                              x_mask, coord_mask, opts);
        case StackKind::eset:
            return stack_eset(tape, model.store, prefix, cfg.layer(), cfg.m, x0, coordinator,
                              x_mask, coord_mask, opts);
    }
    throw ConfigError("unknown stacking kind");
}

}  // namespace

ForwardOut model_forward(Tape& tape, Model& model, const Tensor& regions, const Mask& region_mask,
                         const std::vector<std::size_t>& token_ids, const Mask& token_mask,
                         const GateOptions& opts) {
    const ModelConfig& cfg = model.cfg;
    if (regions.rank() != 2 || regions.cols() != cfg.d_img) {
        throw DimensionError("regions must be n x d_img");
    }
    if (token_ids.size() != token_mask.size() || region_mask.size() != regions.rows()) {
        throw MaskError("example masks disagree with the example contents");
    }
    ParameterStore& store = model.store;

    Var emb = tape.embedding_rows(tape.parameter(store, "embed.table"), token_ids);
    Var q0 = tape.matmul(emb, tape.parameter(store, "embed.proj"));
    Var i0 = tape.matmul(tape.constant(regions), tape.parameter(store, "img.proj"));

    // Pooled projected regions; linearity makes this identical to projecting
    // the pooled raw regions.
    Var image_mean = tape.masked_mean_rows(i0, region_mask);

    // Coordinators below are single already-pooled rows, so no coord mask.
    std::optional<Var> q_coord;
    if (cfg.variant != Variant::vanilla && cfg.coordinate_question) q_coord = image_mean;
    StackOut qs = run_stack(tape, model, "qstream", q0, q_coord, token_mask, std::nullopt, opts);

    Var question_summary = tape.masked_mean_rows(qs.output, token_mask);

    std::optional<Var> i_coord;
    if (cfg.variant == Variant::cst) {
        i_coord = question_summary;
    } else if (cfg.variant == Variant::sst) {
        switch (cfg.sst_context) {
            case SstContext::image_mean: i_coord = image_mean; break;
            case SstContext::image_encoded: break;  // gates read the stream itself
            case SstContext::question: i_coord = question_summary; break;
        }
    }
    StackOut is = run_stack(tape, model, "istream", i0, i_coord, region_mask, std::nullopt, opts);

    Var fq = decode_stream(tape, store, "dec.q", qs.output, token_mask, cfg.decoder);
    Var fi = decode_stream(tape, store, "dec.i", is.output, region_mask, cfg.decoder);
    FusionHeadOut head = final_projection(tape, store, "head", fq, fi);

    ForwardOut out;
    out.logits = head.logits;
    out.stats = qs.stats;
    out.stats.merge(is.stats);
    return out;
}

ForwardOut dataset_forward(Tape& tape, Model& model, const Dataset& ds, std::size_t idx,
                           const GateOptions& opts) {
    return model_forward(tape, model, ds.example_regions(idx), ds.region_mask(idx),
                         ds.token_ids(idx), ds.token_mask(idx), opts);
}

Tensor batch_logits(Model& model, const VqaBatch& batch, const GateOptions& opts,
                    GateStats* stats) {
    const ModelConfig& cfg = model.cfg;
    const std::size_t b = batch.size(), r = cfg.max_regions, d = cfg.d_img, t = cfg.max_tokens;
    if (batch.regions.shape() != Shape{b, r, d} || batch.tokens.shape() != Shape{b, t}) {
        throw DimensionError("batch tensors disagree with the model config");
    }
    Tensor out({b, cfg.n_answers});
    for (std::size_t k = 0; k < b; ++k) {
        Tensor regions({r, d});
        std::memcpy(regions.mutable_data(), batch.regions.data() + k * r * d,
                    r * d * sizeof(double));
        std::vector<std::size_t> ids(t);
        for (std::size_t j = 0; j < t; ++j)
            ids[j] = static_cast<std::size_t>(batch.tokens.data()[k * t + j]);

        Tape tape;
        ForwardOut fwd = model_forward(tape, model, regions, batch.region_mask.row(k), ids,
                                       batch.token_mask.row(k), opts);
        std::memcpy(out.mutable_data() + k * cfg.n_answers, tape.value(fwd.logits).data(),
                    cfg.n_answers * sizeof(double));
        if (stats) stats->merge(fwd.stats);
    }
    return out;
}

ModelConfig full_scale_config() {
    ModelConfig cfg;
    cfg.d_model = 512;
    cfg.h = 8;
    cfg.m = 6;
    cfg.d_img = 2048;
    cfg.d_emb = 300;
    cfg.d_z = 1024;
    cfg.n_answers = 3129;
    cfg.vocab = 1000;
    cfg.max_regions = 100;
    cfg.max_tokens = 14;
    cfg.decoder = DecoderKind::encode;
    return cfg;
}

}  // namespace sgt
