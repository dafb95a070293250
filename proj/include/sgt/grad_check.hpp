#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgt/params.hpp"
#include "sgt/tape.hpp"

namespace sgt {

// Builds a scalar loss on the tape using parameters from the store. Must be
// deterministic: the checker re-evaluates it under perturbed parameters.
using LossBuilder = std::function<Var(Tape&, ParameterStore&)>;

struct GradProbe {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradProbe> probes;
    GradProbe worst;
    double max_rel_err = 0.0;
    double tol = 0.0;
    bool pass = false;
};

// Central-difference check: for each probed scalar parameter, compares the
// analytic gradient against (L(th+h) - L(th-h)) / 2h and reports the max of
// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8). `probes` scalars are sampled without
// replacement (all of them when probes covers the store). `corrupt_factor`
// scales the analytic side; tests use it to prove the checker catches a bad
// gradient. Never throws on mismatch; the report carries pass/fail.
GradCheckReport grad_check(const LossBuilder& model_fn, ParameterStore& params,
                           std::size_t probes, double h, double tol,
                           std::uint64_t seed = 0, double corrupt_factor = 1.0);

}  // namespace sgt
