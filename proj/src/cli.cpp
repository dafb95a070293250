#include "sgt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgt/dataset.hpp"
#include "sgt/errors.hpp"
#include "sgt/grad_check.hpp"
#include "sgt/init.hpp"
#include "sgt/model.hpp"
#include "sgt/random.hpp"
#include "sgt/train.hpp"
#include "sgt/verify.hpp"

namespace sgt {
namespace {

using nlohmann::ordered_json;

struct RunConfig {
    ModelConfig model;
    AdamConfig adam;
    std::string variant = "sst";
    std::string stacking = "cset";
    std::string sst_context = "image_mean";
    std::string decoder = "encode";
    std::size_t n_prototypes = 7;
    std::size_t min_regions = 3;
    std::size_t min_tokens = 1;
    double noise_std = 0.05;
    std::size_t n_train = 2000;
    std::size_t n_val = 500;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double stop_at_val_acc = 2.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string data_dir;
    std::string out_dir;
    std::string checkpoint;
};

Variant variant_from(const std::string& s) {
    if (s == "vanilla") return Variant::vanilla;
    if (s == "sst") return Variant::sst;
    if (s == "cst") return Variant::cst;
    throw ConfigError("unknown variant '" + s + "' (expected vanilla, sst or cst)");
}

StackKind stacking_from(const std::string& s) {
    if (s == "cset") return StackKind::cset;
    if (s == "eset") return StackKind::eset;
    throw ConfigError("unknown stacking '" + s + "' (expected cset or eset)");
}

SstContext context_from(const std::string& s) {
    if (s == "image_mean") return SstContext::image_mean;
    if (s == "image_encoded") return SstContext::image_encoded;
    if (s == "question") return SstContext::question;
    throw ConfigError("unknown sst_context '" + s +
                      "' (expected image_mean, image_encoded or question)");
}

DecoderKind decoder_from(const std::string& s) {
    if (s == "encode") return DecoderKind::encode;
    if (s == "weighted") return DecoderKind::weighted;
    throw ConfigError("unknown decoder '" + s + "' (expected encode or weighted)");
}

ModelConfig model_config(const RunConfig& cfg) {
    ModelConfig mc = cfg.model;
    mc.variant = variant_from(cfg.variant);
    mc.stacking = stacking_from(cfg.stacking);
    mc.sst_context = context_from(cfg.sst_context);
    mc.decoder = decoder_from(cfg.decoder);
    mc.seed = cfg.seed;
    return mc;
}

SyntheticTaskSpec task_spec(const RunConfig& cfg) {
    SyntheticTaskSpec spec;
    spec.n_prototypes = cfg.n_prototypes;
    spec.vocab = cfg.model.vocab;
    spec.n_answers = cfg.model.n_answers;
    spec.d_img = cfg.model.d_img;
    spec.min_regions = cfg.min_regions;
    spec.max_regions = cfg.model.max_regions;
    spec.min_tokens = cfg.min_tokens;
    spec.max_tokens = cfg.model.max_tokens;
    spec.noise_std = cfg.noise_std;
    spec.seed = cfg.seed;
    return spec;
}

void apply_json(RunConfig& cfg, const ordered_json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "d_model") cfg.model.d_model = value.get<std::size_t>();
        else if (key == "h") cfg.model.h = value.get<std::size_t>();
        else if (key == "depth") cfg.model.m = value.get<std::size_t>();
        else if (key == "variant") cfg.variant = value.get<std::string>();
        else if (key == "stacking") cfg.stacking = value.get<std::string>();
        else if (key == "sst_context") cfg.sst_context = value.get<std::string>();
        else if (key == "decoder") cfg.decoder = value.get<std::string>();
        else if (key == "d_img") cfg.model.d_img = value.get<std::size_t>();
        else if (key == "d_emb") cfg.model.d_emb = value.get<std::size_t>();
        else if (key == "d_z") cfg.model.d_z = value.get<std::size_t>();
        else if (key == "n_answers") cfg.model.n_answers = value.get<std::size_t>();
        else if (key == "vocab") cfg.model.vocab = value.get<std::size_t>();
        else if (key == "max_regions") cfg.model.max_regions = value.get<std::size_t>();
        else if (key == "max_tokens") cfg.model.max_tokens = value.get<std::size_t>();
        else if (key == "coordinate_question") cfg.model.coordinate_question = value.get<bool>();
        else if (key == "lr") cfg.adam.lr = value.get<double>();
        else if (key == "beta1") cfg.adam.beta1 = value.get<double>();
        else if (key == "beta2") cfg.adam.beta2 = value.get<double>();
        else if (key == "epsilon") cfg.adam.epsilon = value.get<double>();
        else if (key == "decay") cfg.adam.decay = value.get<double>();
        else if (key == "n_prototypes") cfg.n_prototypes = value.get<std::size_t>();
        else if (key == "min_regions") cfg.min_regions = value.get<std::size_t>();
        else if (key == "min_tokens") cfg.min_tokens = value.get<std::size_t>();
        else if (key == "noise_std") cfg.noise_std = value.get<double>();
        else if (key == "n_train") cfg.n_train = value.get<std::size_t>();
        else if (key == "n_val") cfg.n_val = value.get<std::size_t>();
        else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
        else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
        else if (key == "stop_at_val_acc") cfg.stop_at_val_acc = value.get<double>();
        else if (key == "seed") { cfg.seed = value.get<std::uint64_t>(); cfg.seed_set = true; }
        else if (key == "data_dir") cfg.data_dir = value.get<std::string>();
        else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
        else if (key == "checkpoint") cfg.checkpoint = value.get<std::string>();
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

ordered_json resolved_json(const RunConfig& cfg) {
    ordered_json j;
    j["d_model"] = cfg.model.d_model;
    j["h"] = cfg.model.h;
    j["depth"] = cfg.model.m;
    j["variant"] = cfg.variant;
    j["stacking"] = cfg.stacking;
    j["sst_context"] = cfg.sst_context;
    j["decoder"] = cfg.decoder;
    j["d_img"] = cfg.model.d_img;
    j["d_emb"] = cfg.model.d_emb;
    j["d_z"] = cfg.model.d_z;
    j["n_answers"] = cfg.model.n_answers;
    j["vocab"] = cfg.model.vocab;
    j["max_regions"] = cfg.model.max_regions;
    j["max_tokens"] = cfg.model.max_tokens;
    j["coordinate_question"] = cfg.model.coordinate_question;
    j["lr"] = cfg.adam.lr;
    j["beta1"] = cfg.adam.beta1;
    j["beta2"] = cfg.adam.beta2;
    j["epsilon"] = cfg.adam.epsilon;
    j["decay"] = cfg.adam.decay;
    j["n_prototypes"] = cfg.n_prototypes;
    j["min_regions"] = cfg.min_regions;
    j["min_tokens"] = cfg.min_tokens;
    j["noise_std"] = cfg.noise_std;
    j["n_train"] = cfg.n_train;
    j["n_val"] = cfg.n_val;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["stop_at_val_acc"] = cfg.stop_at_val_acc;
    j["seed"] = cfg.seed;
    j["data_dir"] = cfg.data_dir;
    j["out_dir"] = cfg.out_dir;
    j["checkpoint"] = cfg.checkpoint;
    return j;
}

void finalize_config(RunConfig& cfg, const std::string& config_path) {
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw IoError("cannot read config file " + config_path);
        ordered_json j;
        try {
            j = ordered_json::parse(is);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold one flat JSON object");
        apply_json(cfg, j);
    }
}

void resolve_seed(RunConfig& cfg) {
    if (cfg.seed_set) return;
    if (const char* env = std::getenv("SEG_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("SEG_SEED is not an unsigned integer: " + std::string(env));
        }
    }
}

void echo_config(const RunConfig& cfg) {
    const std::string text = resolved_json(cfg).dump();
    std::cerr << "resolved_config " << text << "\n";
    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.out_dir, ec);
        if (ec) throw IoError("cannot create " + cfg.out_dir + ": " + ec.message());
        std::ofstream os(cfg.out_dir + "/resolved_config.json");
        if (!os) throw IoError("cannot write " + cfg.out_dir + "/resolved_config.json");
        os << text << "\n";
    }
}

// ----- subcommands ----------------------------------------------------------

int cmd_gen(RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("gen requires --out");
    echo_config(cfg);
    Dataset ds = generate_dataset(task_spec(cfg), cfg.n_train, cfg.n_val);
    save_dataset(ds, cfg.out_dir);
    std::cout << "generated " << ds.train_idx.size() << " train and " << ds.val_idx.size()
              << " val examples in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_train(RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw ConfigError("train requires --data");
    if (cfg.out_dir.empty()) throw ConfigError("train requires --out");
    echo_config(cfg);
    Dataset ds = load_dataset(cfg.data_dir);
    Model model = build_model(model_config(cfg));

    TrainOptions opts;
    opts.adam = cfg.adam;
    opts.epochs = cfg.epochs;
    opts.batch_size = cfg.batch_size;
    opts.seed = cfg.seed;
    opts.out_dir = cfg.out_dir;
    opts.stop_at_val_acc = cfg.stop_at_val_acc;
    TrainResult result = train(model, ds, opts);

    for (const EpochRecord& rec : result.history) {
        std::printf("epoch %zu lr %.3g train_loss %.4f val_loss %.4f val_acc %.4f\n", rec.epoch,
                    rec.lr, rec.train_loss, rec.val_loss, rec.val_acc);
    }
    if (result.aborted) {
        std::cerr << "aborted: non-finite loss; last good checkpoint kept at "
                  << result.checkpoint << "\n";
        return 3;
    }
    std::printf("done: %zu epochs, best val_acc %.4f, checkpoint %s\n", result.history.size(),
                result.best_val_acc, result.checkpoint.c_str());
    return 0;
}

int cmd_eval(RunConfig& cfg, const std::string& split) {
    if (cfg.data_dir.empty()) throw ConfigError("eval requires --data");
    if (cfg.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
    echo_config(cfg);
    Dataset ds = load_dataset(cfg.data_dir);
    Model model = build_model(model_config(cfg));
    model.store.load_checkpoint(cfg.checkpoint);

    const std::vector<std::size_t>& ids = split == "train" ? ds.train_idx : ds.val_idx;
    EvalReport report = evaluate(model, ds, ids);
    std::cout << report.to_json() << "\n";
    if (!cfg.out_dir.empty()) {
        std::ofstream os(cfg.out_dir + "/eval.json");
        if (!os) throw IoError("cannot write " + cfg.out_dir + "/eval.json");
        os << report.to_json() << "\n";
    }
    return 0;
}

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(shape);
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.normal();
    return t;
}

int cmd_gradcheck(RunConfig& cfg, double tol, bool corrupt) {
    echo_config(cfg);
    const double factor = corrupt ? 2.0 : 1.0;
    bool all_pass = true;
    for (const GradSection& section : gradient_sections(cfg.seed)) {
        GradCheckReport report = section.run(1e-5, tol, factor);
        all_pass = all_pass && report.pass;
        std::printf("%-18s probes %3zu max_rel_err %.3e %s\n", section.name.c_str(),
                    report.probes.size(), report.max_rel_err, report.pass ? "pass" : "FAIL");
    }
    std::printf("gradcheck %s at tol %.1e\n", all_pass ? "passed" : "FAILED", tol);
    return all_pass ? 0 : 1;
}

int cmd_oracle(RunConfig& cfg, std::size_t cases, std::size_t max_dim, double tol) {
    echo_config(cfg);
    OracleReport report = oracle_suite(cases, max_dim, cfg.seed, tol);
    std::printf("oracle cases %zu max_err %.3e worst \"%s\" %s\n", report.cases, report.max_err,
                report.worst.c_str(), report.pass ? "pass" : "FAIL");
    return report.pass ? 0 : 1;
}

int cmd_bench(RunConfig& cfg, const std::vector<std::string>& variants,
              const std::vector<std::size_t>& sizes, std::size_t reps) {
    if (variants.empty() || sizes.empty() || reps == 0) {
        throw ConfigError("bench needs at least one variant, one size and one rep");
    }
    for (const std::string& v : variants) (void)variant_from(v);
    echo_config(cfg);

    auto run_once = [&](Model& model, const Tensor& regions, const Mask& rmask,
                        const std::vector<std::size_t>& ids, const Mask& tmask) {
        const auto t0 = std::chrono::steady_clock::now();
        Tape tape;
        ForwardOut fwd = model_forward(tape, model, regions, rmask, ids, tmask);
        (void)tape.value(fwd.logits);
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(t1 - t0).count();
    };

    auto series = [&](const std::string& variant, std::size_t size) {
        RunConfig local = cfg;
        local.variant = variant;
        local.model.max_regions = size;
        Model model = build_model(model_config(local));
        Rng rng(cfg.seed + size);
        Tensor regions = random_tensor({size, local.model.d_img}, rng);
        Mask rmask = Mask::full(size);
        Mask tmask = Mask::full(local.model.max_tokens);
        std::vector<std::size_t> ids(local.model.max_tokens);
        for (std::size_t i = 0; i < ids.size(); ++i)
            ids[i] = 1 + rng.index(local.model.vocab - 1);
        std::vector<double> times(reps);
        for (std::size_t r = 0; r < reps; ++r) times[r] = run_once(model, regions, rmask, ids, tmask);
        std::sort(times.begin(), times.end());
        const double median = reps % 2 == 1
                                  ? times[reps / 2]
                                  : 0.5 * (times[reps / 2 - 1] + times[reps / 2]);
        const std::size_t p95_at =
            std::min(reps - 1, static_cast<std::size_t>(std::ceil(0.95 * double(reps))) - 1);
        return std::pair<double, double>(median, times[p95_at]);
    };

    std::printf("variant,size,reps,median_ms,p95_ms,ratio_vs_vanilla\n");
    for (std::size_t size : sizes) {
        const auto vanilla = series("vanilla", size);
        for (const std::string& variant : variants) {
            const auto timing = variant == "vanilla" ? vanilla : series(variant, size);
            std::printf("%s,%zu,%zu,%.3f,%.3f,%.3f\n", variant.c_str(), size, reps, timing.first,
                        timing.second, timing.first / vanilla.first);
        }
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Segregating-transformer toolkit: synthetic data, training, verification"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string split = "val";
    double gradcheck_tol = 1e-4;
    bool corrupt = false;
    std::size_t oracle_cases = 100;
    std::size_t oracle_max_dim = 8;
    double oracle_tol = 1e-12;
    std::vector<std::string> bench_variants = {"vanilla", "sst"};
    std::vector<std::size_t> bench_sizes = {10};
    std::size_t bench_reps = 5;

    // Mirrors of every overridable field; applied only when the flag is set.
    RunConfig f = cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON config file");
        sub->add_option("--seed", f.seed, "global seed (falls back to SEG_SEED)");
        sub->add_option("--out", f.out_dir, "output directory");
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--d-model", f.model.d_model, "model width");
        sub->add_option("--heads", f.model.h, "attention heads");
        sub->add_option("--depth", f.model.m, "stack depth per stream");
        sub->add_option("--variant", f.variant, "vanilla, sst or cst");
        sub->add_option("--stacking", f.stacking, "cset or eset");
        sub->add_option("--sst-context", f.sst_context,
                        "image_mean, image_encoded or question");
        sub->add_option("--decoder", f.decoder, "encode or weighted");
        sub->add_option("--d-img", f.model.d_img, "region feature width");
        sub->add_option("--d-emb", f.model.d_emb, "token embedding width");
        sub->add_option("--d-z", f.model.d_z, "fusion projection width");
        sub->add_option("--n-answers", f.model.n_answers, "answer classes");
        sub->add_option("--vocab", f.model.vocab, "token vocabulary size");
        sub->add_option("--max-regions", f.model.max_regions, "region rows per example");
        sub->add_option("--max-tokens", f.model.max_tokens, "token slots per example");
        sub->add_flag("--coordinate-question", f.model.coordinate_question,
                      "gate the question stream with the image summary");
    };
    auto add_task = [&](CLI::App* sub) {
        sub->add_option("--n-prototypes", f.n_prototypes, "latent region prototypes");
        sub->add_option("--min-regions", f.min_regions, "fewest regions per example");
        sub->add_option("--min-tokens", f.min_tokens, "fewest tokens per question");
        sub->add_option("--noise-std", f.noise_std, "region feature jitter");
        sub->add_option("--n-train", f.n_train, "training examples");
        sub->add_option("--n-val", f.n_val, "validation examples");
    };
    auto add_train = [&](CLI::App* sub) {
        sub->add_option("--data", f.data_dir, "dataset directory");
        sub->add_option("--lr", f.adam.lr, "Adam learning rate");
        sub->add_option("--beta1", f.adam.beta1, "Adam beta1");
        sub->add_option("--beta2", f.adam.beta2, "Adam beta2");
        sub->add_option("--epsilon", f.adam.epsilon, "Adam epsilon");
        sub->add_option("--decay", f.adam.decay, "per-epoch lr multiplier");
        sub->add_option("--epochs", f.epochs, "training epochs");
        sub->add_option("--batch-size", f.batch_size, "minibatch size");
        sub->add_option("--stop-at-val-acc", f.stop_at_val_acc,
                        "stop once validation accuracy reaches this");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate the synthetic dataset");
    add_common(gen);
    add_model(gen);
    add_task(gen);

    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_common(train_cmd);
    add_model(train_cmd);
    add_task(train_cmd);
    add_train(train_cmd);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd);
    add_model(eval_cmd);
    add_task(eval_cmd);
    eval_cmd->add_option("--data", f.data_dir, "dataset directory");
    eval_cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file");
    eval_cmd->add_option("--split", split, "train or val")
        ->check(CLI::IsMember({"train", "val"}));

    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of every layer type");
    add_common(gradcheck_cmd);
    gradcheck_cmd->add_option("--tol", gradcheck_tol, "relative error tolerance");
    gradcheck_cmd->add_flag("--corrupt", corrupt, "double one analytic gradient (must fail)");

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "randomized comparison against brute-force attention");
    add_common(oracle_cmd);
    oracle_cmd->add_option("--cases", oracle_cases, "random instances");
    oracle_cmd->add_option("--max-dim", oracle_max_dim, "largest model width drawn");
    oracle_cmd->add_option("--tol", oracle_tol, "max absolute difference allowed");

    CLI::App* bench_cmd = app.add_subcommand("bench", "forward-pass latency table");
    add_common(bench_cmd);
    add_model(bench_cmd);
    add_task(bench_cmd);
    bench_cmd->add_option("--variants", bench_variants, "variants to time")->delimiter(',');
    bench_cmd->add_option("--sizes", bench_sizes, "region counts to time")->delimiter(',');
    bench_cmd->add_option("--reps", bench_reps, "repetitions per cell");

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();

        finalize_config(cfg, config_path);
        auto override_if = [&](const char* flag, auto& dst, const auto& src) {
            const CLI::Option* opt = active->get_option_no_throw(flag);
            if (opt != nullptr && opt->count() > 0) dst = src;
        };
        override_if("--d-model", cfg.model.d_model, f.model.d_model);
        override_if("--heads", cfg.model.h, f.model.h);
        override_if("--depth", cfg.model.m, f.model.m);
        override_if("--variant", cfg.variant, f.variant);
        override_if("--stacking", cfg.stacking, f.stacking);
        override_if("--sst-context", cfg.sst_context, f.sst_context);
        override_if("--decoder", cfg.decoder, f.decoder);
        override_if("--d-img", cfg.model.d_img, f.model.d_img);
        override_if("--d-emb", cfg.model.d_emb, f.model.d_emb);
        override_if("--d-z", cfg.model.d_z, f.model.d_z);
        override_if("--n-answers", cfg.model.n_answers, f.model.n_answers);
        override_if("--vocab", cfg.model.vocab, f.model.vocab);
        override_if("--max-regions", cfg.model.max_regions, f.model.max_regions);
        override_if("--max-tokens", cfg.model.max_tokens, f.model.max_tokens);
        override_if("--coordinate-question", cfg.model.coordinate_question,
                    f.model.coordinate_question);
        override_if("--lr", cfg.adam.lr, f.adam.lr);
        override_if("--beta1", cfg.adam.beta1, f.adam.beta1);
        override_if("--beta2", cfg.adam.beta2, f.adam.beta2);
        override_if("--epsilon", cfg.adam.epsilon, f.adam.epsilon);
        override_if("--decay", cfg.adam.decay, f.adam.decay);
        override_if("--n-prototypes", cfg.n_prototypes, f.n_prototypes);
        override_if("--min-regions", cfg.min_regions, f.min_regions);
        override_if("--min-tokens", cfg.min_tokens, f.min_tokens);
        override_if("--noise-std", cfg.noise_std, f.noise_std);
        override_if("--n-train", cfg.n_train, f.n_train);
        override_if("--n-val", cfg.n_val, f.n_val);
        override_if("--epochs", cfg.epochs, f.epochs);
        override_if("--batch-size", cfg.batch_size, f.batch_size);
        override_if("--stop-at-val-acc", cfg.stop_at_val_acc, f.stop_at_val_acc);
        override_if("--data", cfg.data_dir, f.data_dir);
        override_if("--out", cfg.out_dir, f.out_dir);
        override_if("--checkpoint", cfg.checkpoint, f.checkpoint);
        {
            const CLI::Option* opt = active->get_option_no_throw("--seed");
            if (opt != nullptr && opt->count() > 0) {
                cfg.seed = f.seed;
                cfg.seed_set = true;
            }
        }
        resolve_seed(cfg);

        if (active == gen) return cmd_gen(cfg);
        if (active == train_cmd) return cmd_train(cfg);
        if (active == eval_cmd) return cmd_eval(cfg, split);
        if (active == gradcheck_cmd) return cmd_gradcheck(cfg, gradcheck_tol, corrupt);
        if (active == oracle_cmd) return cmd_oracle(cfg, oracle_cases, oracle_max_dim, oracle_tol);
        if (active == bench_cmd) return cmd_bench(cfg, bench_variants, bench_sizes, bench_reps);
        throw ConfigError("no subcommand selected");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace sgt
