#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgt/tensor.hpp"

namespace sgt {

class ParameterStore;

// Handle into a Tape. Only meaningful for the tape that produced it.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Records every primitive executed during a forward pass, in execution
// order, so one reverse sweep can accumulate gradients. A tape is confined
// to one forward/backward pair; backward() can run once.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves.
    Var constant(Tensor value);
    Var parameter(ParameterStore& store, const std::string& name);

    const Tensor& value(Var v) const;
    // Gradient of the loss w.r.t. node v; zeros if v never received one.
    Tensor grad(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

    // Primitives. Forward semantics match the plain tensor kernels.
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var softmax(Var a, std::size_t axis, std::optional<Mask> mask = std::nullopt);
    Var concat(const std::vector<Var>& parts, std::size_t axis);
    Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
    Var reshape(Var a, Shape shape);
    Var masked_mean_rows(Var a, Mask mask);
    Var layer_norm(Var x, Var gain, Var bias);
    Var embedding_rows(Var table, std::vector<std::size_t> ids);
    Var add_n(const std::vector<Var>& terms);
    Var sum_all(Var a);
    // Softmax cross-entropy of one logit row against an answer index; scalar.
    Var cross_entropy_logits(Var logits, std::size_t label);

    // Reverse sweep from a scalar loss. Parameter gradients are accumulated
    // into the stores the parameters came from.
    void backward(Var loss);
    bool backward_done() const { return backward_done_; }

private:
    struct Node {
        Tensor value;
        // Accumulates parent gradients given this node's output gradient.
        std::function<void(Tape&, const Tensor&)> backprop;
    };

    Var push(Tensor value, std::function<void(Tape&, const Tensor&)> backprop);
    void accumulate(std::int32_t id, const Tensor& delta);
    const Tensor& val(Var v) const;
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;  // empty tensor = no gradient yet
    struct ParamRef {
        ParameterStore* store;
        std::string name;
        std::int32_t node;
    };
    std::vector<ParamRef> params_;
    std::map<std::pair<const ParameterStore*, std::string>, Var> param_lookup_;
    bool backward_done_ = false;
};

}  // namespace sgt
