#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgt/tensor.hpp"

namespace sgt {

// Adam hyperparameters. lr applies per step; decay multiplies lr once per
// epoch (the training loop owns the schedule and passes a decayed copy).
struct AdamConfig {
    double lr = 0.0001;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-8;
    double decay = 0.5;

    void validate() const;
    // Effective lr after `epoch` completed epochs.
    double lr_at_epoch(std::size_t epoch) const;
};

// Named trainable tensors with gradient accumulators and Adam moment
// buffers. Iteration order is the lexicographic name order, which keeps
// every sweep deterministic.
class ParameterStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
        Tensor m;
        Tensor v;
        std::uint64_t step = 0;
    };

    // Registers a parameter; the name must be fresh.
    void add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const Tensor& value(const std::string& name) const;
    void set_value(const std::string& name, Tensor v);
    const Tensor& grad(const std::string& name) const;
    const Entry& entry(const std::string& name) const;

    void accumulate_grad(const std::string& name, const Tensor& delta);
    void zero_grads();

    // One bias-corrected Adam update over every parameter; gradients are
    // zeroed afterwards. Throws NumericError naming the parameter if its
    // gradient contains non-finite values.
    void adam_step(const AdamConfig& cfg);

    std::vector<std::string> names() const;
    std::size_t count() const { return entries_.size(); }
    std::size_t scalar_count() const;

    // Checkpoint: (u32 LE name length, name bytes, SGT1 tensor) records,
    // value buffers only, in name order.
    void save_checkpoint(const std::string& path) const;
    // Loads values into already-registered parameters; shape or name
    // mismatches raise IoError.
    void load_checkpoint(const std::string& path);

private:
    // Zero tensors shared per shape; copy-on-write detaches them when
    // something actually writes.
    Tensor shared_zero(const Shape& shape);

    std::map<std::string, Entry> entries_;
    std::map<Shape, Tensor> zero_pool_;
};

}  // namespace sgt
