#include "sgt/tape.hpp"

#include <cmath>
#include <utility>

#include "sgt/errors.hpp"
#include "sgt/params.hpp"

namespace sgt {

Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> backprop) {
    nodes_.push_back(Node{std::move(value), std::move(backprop)});
    grads_.emplace_back();
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw ContractError("Var does not belong to this tape");
    }
}

const Tensor& Tape::val(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::value(Var v) const { return val(v); }

Tensor Tape::grad(Var v) const {
    check(v);
    const Tensor& g = grads_[static_cast<std::size_t>(v.id)];
    return g.empty() ? Tensor::zeros(val(v).shape()) : g;
}

void Tape::accumulate(std::int32_t id, const Tensor& delta) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) {
        g = delta;
        return;
    }
    double* p = g.mutable_data();
    const double* d = delta.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] += d[i];
}

Var Tape::constant(Tensor value) {
    return push(std::move(value), nullptr);
}

Var Tape::parameter(ParameterStore& store, const std::string& name) {
    const auto key = std::make_pair(static_cast<const ParameterStore*>(&store), name);
    auto it = param_lookup_.find(key);
    if (it != param_lookup_.end()) return it->second;
    Var v = push(store.value(name), nullptr);
    params_.push_back(ParamRef{&store, name, v.id});
    param_lookup_.emplace(key, v);
    return v;
}

Var Tape::matmul(Var a, Var b) {
    if (val(a).rank() != 2 || val(b).rank() != 2) {
        throw DimensionError("tape matmul requires rank-2 operands, got " +
                             shape_str(val(a).shape()) + " and " + shape_str(val(b).shape()));
    }
    Tensor out = sgt::matmul(val(a), val(b));
    const Tensor av = val(a), bv = val(b);
    return push(std::move(out), [a, b, av, bv](Tape& t, const Tensor& g) {
        t.accumulate(a.id, sgt::matmul(g, sgt::transpose(bv)));
        t.accumulate(b.id, sgt::matmul(sgt::transpose(av), g));
    });
}

Var Tape::transpose(Var a) {
    return push(sgt::transpose(val(a)), [a](Tape& t, const Tensor& g) {
        t.accumulate(a.id, sgt::transpose(g));
    });
}

Var Tape::add(Var a, Var b) {
    Tensor out = sgt::add(val(a), val(b));
    const Shape sa = val(a).shape(), sb = val(b).shape();
    return push(std::move(out), [a, b, sa, sb](Tape& t, const Tensor& g) {
        t.accumulate(a.id, reduce_to_shape(g, sa));
        t.accumulate(b.id, reduce_to_shape(g, sb));
    });
}

Var Tape::mul(Var a, Var b) {
    Tensor out = sgt::mul(val(a), val(b));
    const Tensor av = val(a), bv = val(b);
    return push(std::move(out), [a, b, av, bv](Tape& t, const Tensor& g) {
        t.accumulate(a.id, reduce_to_shape(sgt::mul(g, bv), av.shape()));
        t.accumulate(b.id, reduce_to_shape(sgt::mul(g, av), bv.shape()));
    });
}

Var Tape::scale(Var a, double s) {
    return push(sgt::scale(val(a), s), [a, s](Tape& t, const Tensor& g) {
        t.accumulate(a.id, sgt::scale(g, s));
    });
}

Var Tape::relu(Var a) {
    Tensor out = sgt::relu(val(a));
    const Tensor av = val(a);
    return push(std::move(out), [a, av](Tape& t, const Tensor& g) {
        Tensor d(av.shape());
        double* p = d.mutable_data();
        const double* x = av.data();
        const double* gg = g.data();
        // d/dx relu at exactly 0 is defined as 0.
        for (std::size_t i = 0; i < av.size(); ++i) p[i] = x[i] > 0.0 ? gg[i] : 0.0;
        t.accumulate(a.id, d);
    });
}

Var Tape::sigmoid(Var a) {
    Tensor out = sgt::sigmoid(val(a));
    const Tensor y = out;
    return push(std::move(out), [a, y](Tape& t, const Tensor& g) {
        Tensor d(y.shape());
        double* p = d.mutable_data();
        const double* yy = y.data();
        const double* gg = g.data();
        for (std::size_t i = 0; i < y.size(); ++i) p[i] = gg[i] * yy[i] * (1.0 - yy[i]);
        t.accumulate(a.id, d);
    });
}

Var Tape::softmax(Var a, std::size_t axis, std::optional<Mask> mask) {
    Tensor out = sgt::softmax(val(a), axis, mask ? &*mask : nullptr);
    const Tensor y = out;
    return push(std::move(out), [a, axis, y](Tape& t, const Tensor& g) {
        // dx = y * (g - sum(g * y)) per lane; masked lanes have y = 0.
        std::size_t inner = 1;
        for (std::size_t d = axis + 1; d < y.rank(); ++d) inner *= y.shape()[d];
        const std::size_t len = y.shape()[axis];
        const std::size_t outer = y.size() / (inner * len);
        Tensor dx(y.shape());
        double* p = dx.mutable_data();
        const double* yy = y.data();
        const double* gg = g.data();
        for (std::size_t ou = 0; ou < outer; ++ou) {
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = ou * len * inner + in;
                double dot = 0.0;
                for (std::size_t i = 0; i < len; ++i) dot += gg[base + i * inner] * yy[base + i * inner];
                for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t ix = base + i * inner;
                    p[ix] = yy[ix] * (gg[ix] - dot);
                }
            }
        }
        t.accumulate(a.id, dx);
    });
}

Var Tape::concat(const std::vector<Var>& parts, std::size_t axis) {
    std::vector<Tensor> vs;
    vs.reserve(parts.size());
    for (Var p : parts) vs.push_back(val(p));
    Tensor out = sgt::concat(vs, axis);

    std::vector<Shape> shapes;
    shapes.reserve(parts.size());
    for (const Tensor& v : vs) shapes.push_back(v.shape());
    std::vector<Var> ps = parts;
    return push(std::move(out), [ps, shapes, axis](Tape& t, const Tensor& g) {
        std::size_t inner = 1;
        for (std::size_t d = axis + 1; d < g.rank(); ++d) inner *= g.shape()[d];
        std::size_t outer = 1;
        for (std::size_t d = 0; d < axis; ++d) outer *= g.shape()[d];
        const std::size_t total = g.shape()[axis];
        std::size_t offset = 0;
        for (std::size_t pi = 0; pi < ps.size(); ++pi) {
            const std::size_t alen = shapes[pi][axis];
            Tensor part(shapes[pi]);
            double* dst = part.mutable_data();
            const double* src = g.data();
            for (std::size_t ou = 0; ou < outer; ++ou) {
                for (std::size_t x = 0; x < alen * inner; ++x) {
                    dst[ou * alen * inner + x] = src[(ou * total + offset) * inner + x];
                }
            }
            t.accumulate(ps[pi].id, part);
            offset += alen;
        }
    });
}

Var Tape::slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Tensor& x = val(a);
    if (x.rank() != 2 || axis > 1) throw DimensionError("slice requires rank 2 and axis 0/1");
    if (begin >= end || end > x.shape()[axis]) {
        throw DimensionError("slice range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") out of bounds for " + shape_str(x.shape()));
    }
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    const std::size_t out_r = axis == 0 ? end - begin : r;
    const std::size_t out_c = axis == 1 ? end - begin : c;
    Tensor out({out_r, out_c});
    double* o = out.mutable_data();
    const double* p = x.data();
    for (std::size_t i = 0; i < out_r; ++i)
        for (std::size_t j = 0; j < out_c; ++j)
            o[i * out_c + j] = p[(axis == 0 ? i + begin : i) * c + (axis == 1 ? j + begin : j)];

    const Shape in_shape = x.shape();
    return push(std::move(out), [a, axis, begin, in_shape](Tape& t, const Tensor& g) {
        Tensor dx(in_shape);
        double* p = dx.mutable_data();
        const double* gg = g.data();
        const std::size_t c = in_shape[1];
        const std::size_t out_r = g.shape()[0], out_c = g.shape()[1];
        for (std::size_t i = 0; i < out_r; ++i)
            for (std::size_t j = 0; j < out_c; ++j)
                p[(axis == 0 ? i + begin : i) * c + (axis == 1 ? j + begin : j)] = gg[i * out_c + j];
        t.accumulate(a.id, dx);
    });
}

Var Tape::reshape(Var a, Shape shape) {
    const Tensor& x = val(a);
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    if (n != x.size() || shape.empty()) {
        throw DimensionError("reshape " + shape_str(x.shape()) + " to " + shape_str(shape) +
                             " changes element count");
    }
    Tensor out(shape, std::vector<double>(x.data(), x.data() + x.size()));
    const Shape in_shape = x.shape();
    return push(std::move(out), [a, in_shape](Tape& t, const Tensor& g) {
        t.accumulate(a.id, Tensor(in_shape, std::vector<double>(g.data(), g.data() + g.size())));
    });
}

Var Tape::masked_mean_rows(Var a, Mask mask) {
    Tensor out = sgt::masked_mean_rows(val(a), mask);
    const Shape in_shape = val(a).shape();
    return push(std::move(out), [a, mask, in_shape](Tape& t, const Tensor& g) {
        const std::size_t n = in_shape[0], d = in_shape[1];
        const double inv = 1.0 / static_cast<double>(mask.count_valid());
        Tensor dx(in_shape);
        double* p = dx.mutable_data();
        const double* gg = g.data();
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask.valid(i)) continue;
            for (std::size_t j = 0; j < d; ++j) p[i * d + j] = gg[j] * inv;
        }
        t.accumulate(a.id, dx);
    });
}

Var Tape::layer_norm(Var x, Var gain, Var bias) {
    const Tensor& xv = val(x);
    if (xv.rank() != 2) throw DimensionError("layer_norm requires rank 2, got " + shape_str(xv.shape()));
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    if (val(gain).size() != d || val(bias).size() != d) {
        throw DimensionError("layer_norm gain/bias must have " + std::to_string(d) + " entries");
    }
    constexpr double kEps = 1e-5;

    Tensor xhat({n, d});
    Tensor inv_std({n});
    {
        double* xh = xhat.mutable_data();
        double* is = inv_std.mutable_data();
        const double* p = xv.data();
        for (std::size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < d; ++j) mean += p[i * d + j];
            mean /= static_cast<double>(d);
            double var = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double c = p[i * d + j] - mean;
                var += c * c;
            }
            var /= static_cast<double>(d);
            is[i] = 1.0 / std::sqrt(var + kEps);
            for (std::size_t j = 0; j < d; ++j) xh[i * d + j] = (p[i * d + j] - mean) * is[i];
        }
    }
    Tensor out = sgt::add(sgt::mul(xhat, val(gain)), val(bias));
    const Tensor gain_v = val(gain);
    const Shape gain_shape = gain_v.shape(), bias_shape = val(bias).shape();
    return push(std::move(out),
                [x, gain, bias, xhat, inv_std, gain_v, gain_shape, bias_shape, n, d](Tape& t, const Tensor& g) {
        t.accumulate(bias.id, reduce_to_shape(g, bias_shape));
        t.accumulate(gain.id, reduce_to_shape(sgt::mul(g, xhat), gain_shape));

        Tensor dx({n, d});
        double* p = dx.mutable_data();
        const double* gg = g.data();
        const double* xh = xhat.data();
        const double* gv = gain_v.data();
        const double* is = inv_std.data();
        for (std::size_t i = 0; i < n; ++i) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dxh = gg[i * d + j] * gv[j];
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * xh[i * d + j];
            }
            mean_dxhat /= static_cast<double>(d);
            mean_dxhat_xhat /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
                const double dxh = gg[i * d + j] * gv[j];
                p[i * d + j] = is[i] * (dxh - mean_dxhat - xh[i * d + j] * mean_dxhat_xhat);
            }
        }
        t.accumulate(x.id, dx);
    });
}

Var Tape::embedding_rows(Var table, std::vector<std::size_t> ids) {
    const Tensor& tv = val(table);
    if (tv.rank() != 2) throw DimensionError("embedding table must be rank 2");
    const std::size_t vocab = tv.shape()[0], d = tv.shape()[1];
    Tensor out({ids.size(), d});
    double* o = out.mutable_data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= vocab) {
            throw DimensionError("token id " + std::to_string(ids[i]) + " outside vocab " +
                                 std::to_string(vocab));
        }
        const double* row = tv.data() + ids[i] * d;
        for (std::size_t j = 0; j < d; ++j) o[i * d + j] = row[j];
    }
    const Shape table_shape = tv.shape();
    return push(std::move(out), [table, ids, table_shape, d](Tape& t, const Tensor& g) {
        Tensor dt(table_shape);
        double* p = dt.mutable_data();
        const double* gg = g.data();
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < d; ++j) p[ids[i] * d + j] += gg[i * d + j];
        t.accumulate(table.id, dt);
    });
}

Var Tape::add_n(const std::vector<Var>& terms) {
    if (terms.empty()) throw ContractError("add_n of zero terms");
    Tensor out = val(terms.front());
    for (std::size_t i = 1; i < terms.size(); ++i) {
        if (!out.same_shape(val(terms[i]))) {
            throw DimensionError("add_n shape mismatch: " + shape_str(out.shape()) + " vs " +
                                 shape_str(val(terms[i]).shape()));
        }
        out = sgt::add(out, val(terms[i]));
    }
    std::vector<Var> ts = terms;
    return push(std::move(out), [ts](Tape& t, const Tensor& g) {
        for (Var v : ts) t.accumulate(v.id, g);
    });
}

Var Tape::sum_all(Var a) {
    Tensor out = Tensor::scalar(sgt::sum_all(val(a)));
    const Shape in_shape = val(a).shape();
    return push(std::move(out), [a, in_shape](Tape& t, const Tensor& g) {
        t.accumulate(a.id, Tensor::full(in_shape, g.at(0)));
    });
}

Var Tape::cross_entropy_logits(Var logits, std::size_t label) {
    const Tensor& lv = val(logits);
    if (lv.rows() != 1) throw ContractError("cross_entropy_logits expects a single logit row");
    const std::size_t n = lv.cols();
    if (label >= n) throw ContractError("label " + std::to_string(label) + " outside " + std::to_string(n));

    const double* p = lv.data();
    double mx = p[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, p[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += std::exp(p[i] - mx);
    const double loss = std::log(denom) + mx - p[label];

    const Tensor saved = lv;
    const Shape in_shape = lv.shape();
    return push(Tensor::scalar(loss), [logits, label, saved, in_shape, mx, denom](Tape& t, const Tensor& g) {
        const double gs = g.at(0);
        Tensor dx(in_shape);
        double* d = dx.mutable_data();
        const double* p = saved.data();
        for (std::size_t i = 0; i < saved.size(); ++i) {
            double soft = std::exp(p[i] - mx) / denom;
            if (i == label) soft -= 1.0;
            d[i] = gs * soft;
        }
        t.accumulate(logits.id, dx);
    });
}

void Tape::backward(Var loss) {
    check(loss);
    if (backward_done_) throw ContractError("backward already ran on this tape");
    if (val(loss).size() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + shape_str(val(loss).shape()));
    }
    backward_done_ = true;

    grads_[static_cast<std::size_t>(loss.id)] = Tensor::full(val(loss).shape(), 1.0);
    for (std::int32_t i = loss.id; i >= 0; --i) {
        const Tensor& g = grads_[static_cast<std::size_t>(i)];
        if (g.empty()) continue;
        const auto& bp = nodes_[static_cast<std::size_t>(i)].backprop;
        if (bp) bp(*this, g);
    }
    for (const ParamRef& pr : params_) {
        const Tensor& g = grads_[static_cast<std::size_t>(pr.node)];
        if (!g.empty()) pr.store->accumulate_grad(pr.name, g);
    }
}

}  // namespace sgt
