#include "sgt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace sgt {

namespace {

std::size_t shape_product(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

void check_shape_valid(const Shape& s) {
    if (s.empty()) throw DimensionError("tensor shape must have at least one extent");
    for (std::size_t e : s) {
        if (e == 0) throw DimensionError("tensor extents must be positive, got shape " + shape_str(s));
    }
}

constexpr double kMaskSentinel = -1e9;

}  // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape_valid(shape_);
    size_ = shape_product(shape_);
    data_ = std::make_shared<std::vector<double>>(size_, 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    check_shape_valid(shape_);
    size_ = shape_product(shape_);
    if (values.size() != size_) {
        throw DimensionError("data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape_));
    }
    data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_->begin(), t.data_->end(), value);
    return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DimensionError("from_rows needs at least one row");
    const std::size_t c = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * c);
    for (const auto& r : rows) {
        if (r.size() != c) throw DimensionError("from_rows rows have unequal lengths");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), c}, std::move(flat));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw DimensionError("rows() requires rank 1 or 2, got shape " + shape_str(shape_));
}

std::size_t Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw DimensionError("cols() requires rank 1 or 2, got shape " + shape_str(shape_));
}

double* Tensor::mutable_data() {
    if (!data_) throw ContractError("mutable_data() on an empty tensor");
    if (data_.use_count() > 1) data_ = std::make_shared<std::vector<double>>(*data_);
    return data_->data();
}

bool Tensor::all_finite() const {
    if (!data_) return true;
    for (double v : *data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// ----- Mask ----------------------------------------------------------------

Mask::Mask(Shape shape, std::vector<std::uint8_t> flags)
    : shape_(std::move(shape)), flags_(std::move(flags)) {
    check_shape_valid(shape_);
    if (shape_.size() > 2) throw MaskError("mask rank must be 1 or 2, got shape " + shape_str(shape_));
    if (flags_.size() != shape_product(shape_)) {
        throw MaskError("mask flag count " + std::to_string(flags_.size()) +
                        " does not match shape " + shape_str(shape_));
    }
    const std::size_t seq = shape_.back();
    const std::size_t rows = flags_.size() / seq;
    for (std::size_t r = 0; r < rows; ++r) {
        bool any = false;
        for (std::size_t i = 0; i < seq; ++i) any = any || flags_[r * seq + i];
        if (!any) throw MaskError("fully masked sequence at row " + std::to_string(r));
    }
}

Mask Mask::full(std::size_t n) { return Mask({n}, std::vector<std::uint8_t>(n, 1)); }

Mask Mask::prefix(std::size_t n, std::size_t valid) {
    if (valid == 0 || valid > n) {
        throw MaskError("prefix mask needs 1 <= valid <= n, got valid=" + std::to_string(valid) +
                        " n=" + std::to_string(n));
    }
    std::vector<std::uint8_t> f(n, 0);
    std::fill(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(valid), 1);
    return Mask({n}, std::move(f));
}

std::size_t Mask::count_valid() const {
    std::size_t c = 0;
    for (auto f : flags_) c += (f != 0);
    return c;
}

Mask Mask::row(std::size_t r) const {
    if (rank() != 2) throw MaskError("row() requires a rank-2 mask");
    const std::size_t seq = shape_[1];
    std::vector<std::uint8_t> f(flags_.begin() + static_cast<std::ptrdiff_t>(r * seq),
                                flags_.begin() + static_cast<std::ptrdiff_t>((r + 1) * seq));
    return Mask({seq}, std::move(f));
}

// ----- kernels --------------------------------------------------------------

namespace {

// Single 2-D product; k ascending per output element.
void matmul_2d(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || a.rank() > 3 || b.rank() < 2 || b.rank() > 3) {
        throw DimensionError("matmul requires rank 2 or 3 operands, got " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[a.rank() - 2];
    const std::size_t ka = a.shape()[a.rank() - 1];
    const std::size_t kb = b.shape()[b.rank() - 2];
    const std::size_t n = b.shape()[b.rank() - 1];
    if (ka != kb) {
        throw DimensionError("matmul contraction mismatch: " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()));
    }
    const std::size_t batch_a = a.rank() == 3 ? a.shape()[0] : 1;
    const std::size_t batch_b = b.rank() == 3 ? b.shape()[0] : 1;
    if (batch_a != batch_b && batch_a != 1 && batch_b != 1) {
        throw DimensionError("matmul batch extents not broadcastable: " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()));
    }
    const std::size_t batch = std::max(batch_a, batch_b);

    Shape out_shape = (a.rank() == 3 || b.rank() == 3) ? Shape{batch, m, n} : Shape{m, n};
    Tensor out(out_shape);
    double* c = out.mutable_data();
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* pa = a.data() + (batch_a == 1 ? 0 : bi * m * ka);
        const double* pb = b.data() + (batch_b == 1 ? 0 : bi * kb * n);
        matmul_2d(pa, pb, c + bi * m * n, m, ka, n);
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose requires rank 2, got " + shape_str(a.shape()));
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    Tensor out({c, r});
    double* o = out.mutable_data();
    const double* p = a.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) o[j * r + i] = p[i * c + j];
    return out;
}

Tensor softmax(const Tensor& x, std::size_t axis, const Mask* mask) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(x.shape()));
    }
    const std::size_t len = x.shape()[axis];
    if (mask) {
        if (mask->rank() != 1 || mask->size() != len) {
            throw MaskError("softmax mask shape " + shape_str(mask->shape()) +
                            " does not cover axis extent " + std::to_string(len));
        }
        bool any = false;
        for (std::size_t i = 0; i < len; ++i) any = any || mask->valid(i);
        if (!any) throw MaskError("softmax: all positions masked along axis");
    }

    // Walk all lanes: outer x axis x inner decomposition of the row-major index.
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.shape()[d];
    const std::size_t outer = x.size() / (inner * len);

    Tensor out(x.shape());
    double* o = out.mutable_data();
    const double* p = x.data();
    std::vector<double> lane(len);
    for (std::size_t ou = 0; ou < outer; ++ou) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = ou * len * inner + in;
            for (std::size_t i = 0; i < len; ++i) {
                double v = p[base + i * inner];
                if (mask && !mask->valid(i)) v += kMaskSentinel;
                lane[i] = v;
            }
            double mx = lane[0];
            for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, lane[i]);
            double denom = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                lane[i] = std::exp(lane[i] - mx);
                denom += lane[i];
            }
            for (std::size_t i = 0; i < len; ++i) {
                double w = lane[i] / denom;
                if (mask && !mask->valid(i)) w = 0.0;
                o[base + i * inner] = w;
            }
        }
    }
    return out;
}

namespace {

enum class Broadcast { same, a_row, b_row, a_scalar, b_scalar };

bool is_row_of(const Shape& small, const Shape& big) {
    if (big.size() != 2) return false;
    if (small.size() == 1) return small[0] == big[1];
    return small.size() == 2 && small[0] == 1 && small[1] == big[1];
}

bool is_scalar(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n == 1;
}

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::same;
    if (is_row_of(b.shape(), a.shape())) return Broadcast::b_row;
    if (is_row_of(a.shape(), b.shape())) return Broadcast::a_row;
    if (is_scalar(b.shape())) return Broadcast::b_scalar;
    if (is_scalar(a.shape())) return Broadcast::a_scalar;
    throw DimensionError(std::string(op) + ": shapes not broadcastable: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

template <typename F>
Tensor binary_broadcast(const Tensor& a, const Tensor& b, const char* name, F f) {
    const Broadcast kind = classify(a, b, name);
    const Tensor& big = (kind == Broadcast::a_row || kind == Broadcast::a_scalar) ? b : a;
    const Tensor& small = (&big == &a) ? b : a;
    const bool small_is_b = (&small == &b);

    Tensor out(big.shape());
    double* o = out.mutable_data();
    const double* pb = big.data();
    const double* ps = small.data();
    const std::size_t n = big.size();

    if (kind == Broadcast::same) {
        for (std::size_t i = 0; i < n; ++i) o[i] = small_is_b ? f(pb[i], ps[i]) : f(ps[i], pb[i]);
    } else if (kind == Broadcast::a_scalar || kind == Broadcast::b_scalar) {
        const double s = ps[0];
        for (std::size_t i = 0; i < n; ++i) o[i] = small_is_b ? f(pb[i], s) : f(s, pb[i]);
    } else {
        const std::size_t d = big.shape()[1];
        for (std::size_t i = 0; i < n; ++i) {
            const double s = ps[i % d];
            o[i] = small_is_b ? f(pb[i], s) : f(s, pb[i]);
        }
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    double* o = out.mutable_data();
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = p[i] * s;
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    double* o = out.mutable_data();
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = p[i] > 0.0 ? p[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out(a.shape());
    double* o = out.mutable_data();
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = 1.0 / (1.0 + std::exp(-p[i]));
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat of zero parts");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) {
        throw DimensionError("concat axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(first));
    }
    std::size_t axis_total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != first.size()) {
            throw DimensionError("concat rank mismatch: " + shape_str(first) + " vs " + shape_str(p.shape()));
        }
        for (std::size_t d = 0; d < first.size(); ++d) {
            if (d != axis && p.shape()[d] != first[d]) {
                throw DimensionError("concat extent mismatch off axis: " + shape_str(first) + " vs " +
                                     shape_str(p.shape()));
            }
        }
        axis_total += p.shape()[axis];
    }

    Shape out_shape = first;
    out_shape[axis] = axis_total;
    Tensor out(out_shape);
    double* o = out.mutable_data();

    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= first[d];

    std::size_t axis_offset = 0;
    for (const Tensor& p : parts) {
        const std::size_t alen = p.shape()[axis];
        const double* src = p.data();
        for (std::size_t ou = 0; ou < outer; ++ou) {
            double* dst = o + (ou * axis_total + axis_offset) * inner;
            std::memcpy(dst, src + ou * alen * inner, alen * inner * sizeof(double));
        }
        axis_offset += alen;
    }
    return out;
}

double sum_all(const Tensor& a) {
    double s = 0.0;
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += p[i];
    return s;
}

Tensor masked_mean_rows(const Tensor& x, const Mask& mask) {
    if (x.rank() != 2) throw DimensionError("masked_mean_rows requires rank 2, got " + shape_str(x.shape()));
    if (mask.rank() != 1 || mask.size() != x.shape()[0]) {
        throw MaskError("masked_mean_rows mask shape " + shape_str(mask.shape()) +
                        " does not cover " + std::to_string(x.shape()[0]) + " rows");
    }
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    Tensor out({1, d});
    double* o = out.mutable_data();
    std::size_t count = 0;
    const double* p = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.valid(i)) continue;
        ++count;
        for (std::size_t j = 0; j < d; ++j) o[j] += p[i * d + j];
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < d; ++j) o[j] *= inv;
    return out;
}

Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    std::size_t tsize = 1;
    for (std::size_t e : target) tsize *= e;

    Tensor out(target);
    double* o = out.mutable_data();
    const double* p = g.data();
    if (tsize == 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += p[i];
        o[0] = s;
        return out;
    }
    if (is_row_of(target, g.shape())) {
        const std::size_t d = g.shape()[1];
        for (std::size_t i = 0; i < g.size(); ++i) o[i % d] += p[i];
        return out;
    }
    throw DimensionError("cannot reduce gradient " + shape_str(g.shape()) + " to " + shape_str(target));
}

}  // namespace sgt
