#include "sgt/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "sgt/errors.hpp"
#include "sgt/random.hpp"

namespace sgt {

namespace {

double eval_loss(const LossBuilder& model_fn, ParameterStore& params) {
    Tape tape;
    Var loss = model_fn(tape, params);
    const Tensor& v = tape.value(loss);
    if (v.size() != 1) throw ContractError("grad_check loss must be scalar");
    return v.at(0);
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& model_fn, ParameterStore& params,
                           std::size_t probes, double h, double tol,
                           std::uint64_t seed, double corrupt_factor) {
    if (h < 1e-7 || h > 1e-3) throw ConfigError("grad_check step h must lie in [1e-7, 1e-3]");
    if (probes == 0) throw ConfigError("grad_check needs at least one probe");

    params.zero_grads();
    {
        Tape tape;
        Var loss = model_fn(tape, params);
        tape.backward(loss);
    }

    // Flat list of every scalar slot, in name order.
    std::vector<std::pair<std::string, std::size_t>> slots;
    for (const std::string& name : params.names()) {
        const std::size_t n = params.value(name).size();
        for (std::size_t i = 0; i < n; ++i) slots.emplace_back(name, i);
    }
    if (slots.empty()) throw ContractError("grad_check on a store with no parameters");

    if (probes < slots.size()) {
        Rng rng(seed);
        for (std::size_t i = 0; i < probes; ++i) {
            const std::size_t j = i + rng.index(slots.size() - i);
            std::swap(slots[i], slots[j]);
        }
        slots.resize(probes);
    }

    GradCheckReport report;
    report.tol = tol;
    for (const auto& [name, idx] : slots) {
        GradProbe probe;
        probe.param = name;
        probe.index = idx;
        probe.analytic = params.grad(name).at(idx) * corrupt_factor;

        const Tensor original = params.value(name);
        Tensor bumped = original;
        bumped.mutable_data()[idx] = original.at(idx) + h;
        params.set_value(name, bumped);
        const double plus = eval_loss(model_fn, params);

        bumped = original;
        bumped.mutable_data()[idx] = original.at(idx) - h;
        params.set_value(name, bumped);
        const double minus = eval_loss(model_fn, params);
        params.set_value(name, original);

        probe.numeric = (plus - minus) / (2.0 * h);
        probe.rel_err = std::fabs(probe.analytic - probe.numeric) /
                        std::max({std::fabs(probe.analytic), std::fabs(probe.numeric), 1e-8});
        if (probe.rel_err >= report.max_rel_err) {
            report.max_rel_err = probe.rel_err;
            report.worst = probe;
        }
        report.probes.push_back(std::move(probe));
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace sgt
