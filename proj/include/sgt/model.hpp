#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/dataset.hpp"
#include "sgt/fusion.hpp"
#include "sgt/segregation.hpp"

namespace sgt {

enum class Variant { vanilla, sst, cst };

// B-side of the image-stream gates in the SST wiring: the mean-pooled image,
// the encoded image itself, or the question summary.
enum class SstContext { image_mean, image_encoded, question };

struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t h = 4;
    std::size_t m = 2;  // stack depth per stream
    Variant variant = Variant::sst;
    StackKind stacking = StackKind::cset;
    SstContext sst_context = SstContext::image_mean;
    DecoderKind decoder = DecoderKind::encode;
    std::size_t d_img = 32;
    std::size_t d_emb = 16;
    std::size_t d_z = 128;  // fusion projection width
    std::size_t n_answers = 8;
    std::size_t vocab = 32;
    std::size_t max_regions = 10;
    std::size_t max_tokens = 8;
    // Alternative wiring for the coordinated variant: gate the question
    // stream with the image summary instead of leaving it self-segregating.
    bool coordinate_question = false;
    std::uint64_t seed = 0;

    void validate() const;
    LayerConfig layer() const;
};

struct Model {
    ModelConfig cfg;
    ParameterStore store;
};

// Registers every parameter for the configured variant. Initial weights are
// a pure function of (seed, parameter name), so differently gated variants
// share identical attention weights.
Model build_model(const ModelConfig& cfg);
Model build_sst_model(ModelConfig cfg);
Model build_cst_model(ModelConfig cfg);

struct ForwardOut {
    Var logits;  // 1 x n_answers
    GateStats stats;
};

// One example through the full pipeline: embed tokens, project regions, run
// both stream stacks, decode each stream, fuse, classify.
ForwardOut model_forward(Tape& tape, Model& model, const Tensor& regions, const Mask& region_mask,
                         const std::vector<std::size_t>& token_ids, const Mask& token_mask,
                         const GateOptions& opts = {});

ForwardOut dataset_forward(Tape& tape, Model& model, const Dataset& ds, std::size_t idx,
                           const GateOptions& opts = {});

// Forward-only logits for a gathered batch, one row per example. Telemetry
// from every example is merged into *stats when given.
Tensor batch_logits(Model& model, const VqaBatch& batch, const GateOptions& opts = {},
                    GateStats* stats = nullptr);

// The hyperparameters of the full-scale run: d=512, h=8, 3129 answers,
// 100-region images, 14-token questions.
ModelConfig full_scale_config();

}  // namespace sgt
