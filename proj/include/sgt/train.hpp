#pragma once

#include <string>
#include <vector>

#include "sgt/dataset.hpp"
#include "sgt/model.hpp"

namespace sgt {

struct TrainOptions {
    AdamConfig adam;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;   // per-epoch shuffle stream
    std::string out_dir;      // metrics.jsonl and checkpoints; empty keeps everything in memory
    double stop_at_val_acc = 2.0;  // early-stop threshold; > 1 never triggers
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double gate_mean = 0.0;
    double gate_frac_lo = 0.0;
    double gate_frac_hi = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    bool aborted = false;    // non-finite loss or gradient stopped the run
    double best_val_acc = 0.0;
    std::string checkpoint;  // path of the retained checkpoint when out_dir is set
};

struct EvalReport {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<std::size_t> per_class_total;
    std::vector<std::size_t> per_class_correct;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

    std::string to_json() const;
};

// Forward-only evaluation over the given example indices. Gate telemetry
// from every forward is merged into *stats when given.
EvalReport evaluate(Model& model, const Dataset& ds, const std::vector<std::size_t>& ids,
                    const GateOptions& opts = {}, GateStats* stats = nullptr);

// Minibatch Adam training with the per-epoch lr decay schedule. Writes
// metrics.jsonl plus per-epoch and final checkpoints under out_dir; a
// non-finite loss aborts the run and final.ckpt keeps the last good state.
TrainResult train(Model& model, const Dataset& ds, const TrainOptions& opts);

}  // namespace sgt
