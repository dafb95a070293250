#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgt/grad_check.hpp"

namespace sgt {

struct OracleReport {
    std::size_t cases = 0;
    double max_err = 0.0;
    std::string worst;  // which kernel and shape produced max_err
    double tol = 0.0;
    bool pass = false;
};

// Runs `cases` randomized instances comparing attention_core, multi_head and
// cst_layer against the scalar brute-force path, with random key masks.
// Dimensions are drawn with d <= max_dim, sequence lengths <= 4, heads <= 2.
OracleReport oracle_suite(std::size_t cases, std::size_t max_dim, std::uint64_t seed,
                          double tol = 1e-12);

struct GradSection {
    std::string name;
    // Runs the section's finite-difference check with step h, tolerance tol
    // and the grad_check corrupt factor.
    std::function<GradCheckReport(double h, double tol, double corrupt_factor)> run;
};

// The gradient test suite: every layer type (vanilla, self-segregating,
// coordinated), both stackings, both decoders, the fusion head, and two
// end-to-end models, each at small widths where the central difference is
// well conditioned.
std::vector<GradSection> gradient_sections(std::uint64_t seed);

}  // namespace sgt
