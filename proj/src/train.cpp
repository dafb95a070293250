#include "sgt/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sgt/errors.hpp"
#include "sgt/random.hpp"

namespace sgt {

namespace {

// Cross-entropy of one logits row against a label, computed with the same
// max-subtracted reduction the tape uses.
double row_cross_entropy(const double* logits, std::size_t n, std::size_t label) {
    double mx = logits[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits[j] - mx);
    return std::log(sum) + mx - logits[label];
}

std::size_t row_argmax(const double* logits, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (logits[j] > logits[best]) best = j;
    }
    return best;
}

void check_compatible(const Model& model, const Dataset& ds) {
    const ModelConfig& cfg = model.cfg;
    const SyntheticTaskSpec& spec = ds.spec;
    if (cfg.n_answers != spec.n_answers || cfg.d_img != spec.d_img ||
        cfg.vocab != spec.vocab || cfg.max_regions != spec.max_regions ||
        cfg.max_tokens != spec.max_tokens) {
        throw ConfigError("model config and dataset manifest disagree on dimensions");
    }
}

std::string epoch_checkpoint(const std::string& dir, std::size_t epoch) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", epoch);
    return dir + "/epoch_" + buf + ".ckpt";
}

}  // namespace

EvalReport evaluate(Model& model, const Dataset& ds, const std::vector<std::size_t>& ids,
                    const GateOptions& opts, GateStats* stats) {
    check_compatible(model, ds);
    if (ids.empty()) throw ConfigError("evaluation needs at least one example");
    const std::size_t n = model.cfg.n_answers;

    EvalReport report;
    report.per_class_total.assign(n, 0);
    report.per_class_correct.assign(n, 0);
    report.confusion.assign(n, std::vector<std::size_t>(n, 0));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t idx : ids) {
        Tape tape;
        ForwardOut fwd = dataset_forward(tape, model, ds, idx, opts);
        if (stats) stats->merge(fwd.stats);
        const double* logits = tape.value(fwd.logits).data();
        const std::size_t truth = ds.label(idx);
        const std::size_t pred = row_argmax(logits, n);
        loss_sum += row_cross_entropy(logits, n, truth);
        report.per_class_total[truth]++;
        report.confusion[truth][pred]++;
        if (pred == truth) {
            report.per_class_correct[truth]++;
            correct++;
        }
    }
    report.mean_loss = loss_sum / static_cast<double>(ids.size());
    report.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["mean_loss"] = mean_loss;
    j["per_class_total"] = per_class_total;
    j["per_class_correct"] = per_class_correct;
    j["confusion"] = confusion;
    return j.dump();
}

TrainResult train(Model& model, const Dataset& ds, const TrainOptions& opts) {
    opts.adam.validate();
    check_compatible(model, ds);
    if (opts.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (ds.train_idx.empty() || ds.val_idx.empty()) {
        throw ConfigError("training needs non-empty train and val splits");
    }

    const bool persist = !opts.out_dir.empty();
    std::ofstream metrics;
    std::string final_path;
    if (persist) {
        std::error_code ec;
        std::filesystem::create_directories(opts.out_dir, ec);
        if (ec) throw IoError("cannot create " + opts.out_dir + ": " + ec.message());
        metrics.open(opts.out_dir + "/metrics.jsonl", std::ios::trunc);
        if (!metrics) throw IoError("cannot write " + opts.out_dir + "/metrics.jsonl");
        final_path = opts.out_dir + "/final.ckpt";
        model.store.save_checkpoint(final_path);  // last-good state before any update
    }

    TrainResult result;
    if (persist) result.checkpoint = final_path;

    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        AdamConfig step_cfg = opts.adam;
        step_cfg.lr = opts.adam.lr_at_epoch(epoch - 1);

        std::vector<std::size_t> order = ds.train_idx;
        Rng shuffle_rng(opts.seed + epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);
        }

        double loss_sum = 0.0;
        bool bad = false;
        for (std::size_t begin = 0; begin < order.size() && !bad; begin += opts.batch_size) {
            const std::size_t end = std::min(begin + opts.batch_size, order.size());
            const double inv = 1.0 / static_cast<double>(end - begin);
            model.store.zero_grads();
            for (std::size_t k = begin; k < end; ++k) {
                Tape tape;
                ForwardOut fwd = dataset_forward(tape, model, ds, order[k]);
                Var loss = tape.cross_entropy_logits(fwd.logits, ds.label(order[k]));
                const double lv = tape.value(loss).at(0);
                if (!std::isfinite(lv)) {
                    bad = true;
                    break;
                }
                loss_sum += lv;
                tape.backward(tape.scale(loss, inv));
            }
            if (bad) break;
            try {
                model.store.adam_step(step_cfg);
            } catch (const NumericError&) {
                bad = true;
            }
        }
        if (bad) {
            result.aborted = true;
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = step_cfg.lr;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        GateStats gate_stats;
        EvalReport val = evaluate(model, ds, ds.val_idx, {}, &gate_stats);
        rec.val_loss = val.mean_loss;
        rec.val_acc = val.accuracy;
        rec.gate_mean = gate_stats.mean();
        rec.gate_frac_lo = gate_stats.frac_lo();
        rec.gate_frac_hi = gate_stats.frac_hi();
        result.history.push_back(rec);
        result.best_val_acc = std::max(result.best_val_acc, rec.val_acc);

        if (persist) {
            nlohmann::ordered_json j;
            j["epoch"] = rec.epoch;
            j["lr"] = rec.lr;
            j["train_loss"] = rec.train_loss;
            j["val_loss"] = rec.val_loss;
            j["val_acc"] = rec.val_acc;
            j["gate_mean"] = rec.gate_mean;
            j["gate_frac_lo"] = rec.gate_frac_lo;
            j["gate_frac_hi"] = rec.gate_frac_hi;
            metrics << j.dump() << "\n";
            metrics.flush();
            model.store.save_checkpoint(epoch_checkpoint(opts.out_dir, epoch));
            model.store.save_checkpoint(final_path);
        }
        if (rec.val_acc >= opts.stop_at_val_acc) break;
    }
    return result;
}

}  // namespace sgt
