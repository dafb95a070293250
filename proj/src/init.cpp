#include "sgt/init.hpp"

#include <cmath>

#include "sgt/random.hpp"

namespace sgt {

std::uint64_t name_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

void add_xavier(ParameterStore& store, const std::string& name, Shape shape, std::uint64_t seed) {
    const std::size_t fan_in = shape.front();
    const std::size_t fan_out = shape.back();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(name_seed(seed, name));
    Tensor t(std::move(shape));
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.uniform(-limit, limit);
    store.add(name, std::move(t));
}

void add_lecun(ParameterStore& store, const std::string& name, Shape shape, std::uint64_t seed) {
    const std::size_t fan_in = shape.front();
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    Rng rng(name_seed(seed, name));
    Tensor t(std::move(shape));
    double* p = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rng.uniform(-limit, limit);
    store.add(name, std::move(t));
}

void add_zeros(ParameterStore& store, const std::string& name, Shape shape) {
    store.add(name, Tensor::zeros(std::move(shape)));
}

void add_ones(ParameterStore& store, const std::string& name, Shape shape) {
    store.add(name, Tensor::full(std::move(shape), 1.0));
}

}  // namespace sgt
