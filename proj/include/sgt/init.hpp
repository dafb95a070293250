#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sgt/params.hpp"

namespace sgt {

// Seed derived from the run seed and the parameter name (FNV-1a mix). Each
// parameter draws from its own stream, so the realized weights depend only
// on (seed, name), not on registration order. Variants that share parameter
// names therefore share initial weights exactly.
std::uint64_t name_seed(std::uint64_t seed, std::string_view name);

// Uniform in +-sqrt(6 / (fan_in + fan_out)), fans taken from the first and
// last extents of the shape.
void add_xavier(ParameterStore& store, const std::string& name, Shape shape, std::uint64_t seed);

// LeCun-uniform fan-in init (±sqrt(3/fan_in)). Used for the answer
// classifier, whose small class count would otherwise inflate the Xavier
// bound and push initial logits away from uniform.
void add_lecun(ParameterStore& store, const std::string& name, Shape shape, std::uint64_t seed);

void add_zeros(ParameterStore& store, const std::string& name, Shape shape);
void add_ones(ParameterStore& store, const std::string& name, Shape shape);

}  // namespace sgt
