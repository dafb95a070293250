#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "sgt/errors.hpp"
#include "sgt/random.hpp"

namespace sgt {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of doubles. Values are immutable once a tensor is
// handed out; kernels always produce fresh tensors. The data block is shared
// between copies, and mutable_data() detaches (copy-on-write) so in-place
// optimizer updates cannot alias someone else's value.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    // 2-D helper: rows given as an initializer grid.
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    bool empty() const { return !data_; }
    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return size_; }
    std::size_t extent(std::size_t axis) const;

    // Rows/cols of a rank-1/2 tensor (rank-1 is treated as a single row).
    std::size_t rows() const;
    std::size_t cols() const;

    const double* data() const { return data_ ? data_->data() : nullptr; }
    double* mutable_data();

    double at(std::size_t i) const { return (*data_)[i]; }
    double at(std::size_t i, std::size_t j) const { return (*data_)[i * cols() + j]; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    Shape shape_;
    std::size_t size_ = 0;
    std::shared_ptr<std::vector<double>> data_;
};

// Validity flags for padded sequences; true = real position, false = padding.
// A fully padded sequence is rejected at construction.
class Mask {
public:
    Mask(Shape shape, std::vector<std::uint8_t> flags);

    // All positions valid.
    static Mask full(std::size_t n);
    // First `valid` positions valid, rest padding (the generator pads suffixes).
    static Mask prefix(std::size_t n, std::size_t valid);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return flags_.size(); }

    bool valid(std::size_t i) const { return flags_[i] != 0; }
    bool valid(std::size_t row, std::size_t i) const { return flags_[row * shape_.back() + i] != 0; }
    std::size_t count_valid() const;

    // Extract one row of a rank-2 mask as a rank-1 mask.
    Mask row(std::size_t r) const;

private:
    Shape shape_;
    std::vector<std::uint8_t> flags_;
};

// ----- kernels ------------------------------------------------------------
// All kernels are pure and single-threaded with a fixed reduction order:
// every contraction and row reduction accumulates left-to-right in ascending
// index order, so outputs are bitwise stable across runs.

// C[i,j] = sum_k A[i,k] * B[k,j], k ascending. Rank 2x2, or rank-3 batched
// with equal batch extents (a rank-2 operand broadcasts across the batch).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Max-subtracted softmax along `axis`. Masked positions get a -1e9 additive
// sentinel before normalization and are written as exact 0.0 afterwards.
// The mask must be rank 1 with length extent(axis).
Tensor softmax(const Tensor& x, std::size_t axis, const Mask* mask = nullptr);

// Elementwise with broadcasting: equal shapes, a row vector ([d] or [1,d])
// against the rows of [n,d], or a scalar ([1] / [1,1]) against anything.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

double sum_all(const Tensor& a);

// Mean over the valid rows of a rank-2 tensor -> [1, d].
Tensor masked_mean_rows(const Tensor& x, const Mask& mask);

// Sum gradients of a broadcast operand back down to its shape.
Tensor reduce_to_shape(const Tensor& g, const Shape& target);

}  // namespace sgt
