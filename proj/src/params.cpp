#include "sgt/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "sgt/errors.hpp"
#include "sgt/tensor_io.hpp"

namespace sgt {

void AdamConfig::validate() const {
    if (lr < 0.0) throw ConfigError("adam lr must be nonnegative");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("adam beta1 must be in [0,1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("adam beta2 must be in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
    if (decay <= 0.0 || decay > 1.0) throw ConfigError("adam decay must be in (0,1]");
}

double AdamConfig::lr_at_epoch(std::size_t epoch) const {
    double r = lr;
    for (std::size_t i = 0; i < epoch; ++i) r *= decay;
    return r;
}

void ParameterStore::add(const std::string& name, Tensor init) {
    if (name.empty()) throw ContractError("parameter name must be non-empty");
    if (entries_.count(name)) throw ContractError("parameter already registered: " + name);
    Entry e;
    e.grad = shared_zero(init.shape());
    e.m = shared_zero(init.shape());
    e.v = shared_zero(init.shape());
    e.value = std::move(init);
    entries_.emplace(name, std::move(e));
}

const Tensor& ParameterStore::value(const std::string& name) const {
    return entry(name).value;
}

void ParameterStore::set_value(const std::string& name, Tensor v) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    if (!v.same_shape(it->second.value)) {
        throw DimensionError("set_value shape mismatch for " + name + ": " +
                             shape_str(it->second.value.shape()) + " vs " + shape_str(v.shape()));
    }
    it->second.value = std::move(v);
}

const Tensor& ParameterStore::grad(const std::string& name) const {
    return entry(name).grad;
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

void ParameterStore::accumulate_grad(const std::string& name, const Tensor& delta) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    Entry& e = it->second;
    if (!delta.same_shape(e.value)) {
        throw DimensionError("gradient shape mismatch for " + name + ": " +
                             shape_str(e.value.shape()) + " vs " + shape_str(delta.shape()));
    }
    double* g = e.grad.mutable_data();
    const double* d = delta.data();
    for (std::size_t i = 0; i < delta.size(); ++i) g[i] += d[i];
}

void ParameterStore::zero_grads() {
    for (auto& [name, e] : entries_) e.grad = shared_zero(e.value.shape());
}

void ParameterStore::adam_step(const AdamConfig& cfg) {
    cfg.validate();
    for (auto& [name, e] : entries_) {
        if (!e.grad.all_finite()) {
            throw NumericError("non-finite gradient for parameter " + name);
        }
        e.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));

        double* m = e.m.mutable_data();
        double* v = e.v.mutable_data();
        double* w = e.value.mutable_data();
        const double* g = e.grad.data();
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
        e.grad = shared_zero(e.value.shape());
    }
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
}

void ParameterStore::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    for (const auto& [name, e] : entries_) {
        const std::uint32_t len = static_cast<std::uint32_t>(name.size());
        os.write(reinterpret_cast<const char*>(&len), sizeof len);
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_sgt1(os, e.value);
    }
    if (!os) throw IoError("checkpoint write failed: " + path);
}

void ParameterStore::load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    std::size_t seen = 0;
    while (true) {
        std::uint32_t len = 0;
        is.read(reinterpret_cast<char*>(&len), sizeof len);
        if (is.eof() && is.gcount() == 0) break;
        if (!is || len == 0 || len > 4096) throw IoError("corrupt checkpoint record in " + path);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw IoError("truncated checkpoint name in " + path);
        Tensor t = read_sgt1(is);

        auto it = entries_.find(name);
        if (it == entries_.end()) throw IoError("checkpoint has unknown parameter " + name);
        if (!t.same_shape(it->second.value)) {
            throw IoError("checkpoint shape mismatch for " + name + ": expected " +
                          shape_str(it->second.value.shape()) + ", found " + shape_str(t.shape()));
        }
        it->second.value = std::move(t);
        ++seen;
    }
    if (seen != entries_.size()) {
        throw IoError("checkpoint covers " + std::to_string(seen) + " of " +
                      std::to_string(entries_.size()) + " parameters");
    }
}

Tensor ParameterStore::shared_zero(const Shape& shape) {
    auto it = zero_pool_.find(shape);
    if (it != zero_pool_.end()) return it->second;
    Tensor z = Tensor::zeros(shape);
    zero_pool_.emplace(shape, z);
    return z;
}

}  // namespace sgt
