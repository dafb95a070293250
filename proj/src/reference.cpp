#include "sgt/reference.hpp"

#include <cmath>

namespace sgt::ref {

Vec matmul(const Vec& a, const Vec& b, std::size_t m, std::size_t k, std::size_t n) {
    Vec c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * n + j];
            c[i * n + j] = s;
        }
    }
    return c;
}

Vec softmax_row(const Vec& logits, const std::vector<std::uint8_t>& mask) {
    const std::size_t n = logits.size();
    Vec v = logits;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) v[i] += -1e9;
    }
    double mx = v[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        denom += v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        v[i] /= denom;
        if (!mask.empty() && !mask[i]) v[i] = 0.0;
    }
    return v;
}

Vec attention_core(const Vec& a, const Vec& b, const Vec& c,
                   std::size_t nq, std::size_t nk, std::size_t dh,
                   const std::vector<std::uint8_t>& key_mask) {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Vec out(nq * dh, 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
        Vec logits(nk, 0.0);
        for (std::size_t kx = 0; kx < nk; ++kx) {
            double s = 0.0;
            for (std::size_t d = 0; d < dh; ++d) s += a[q * dh + d] * b[kx * dh + d];
            logits[kx] = s * inv_sqrt;
        }
        const Vec w = softmax_row(logits, key_mask);
        for (std::size_t kx = 0; kx < nk; ++kx) {
            for (std::size_t d = 0; d < dh; ++d) out[q * dh + d] += w[kx] * c[kx * dh + d];
        }
    }
    return out;
}

Vec multi_head(const Vec& a, const Vec& b, const Vec& c,
               std::size_t nq, std::size_t nk, std::size_t d,
               const MultiHeadWeights& w,
               const std::vector<std::uint8_t>& key_mask) {
    const std::size_t h = w.heads.size();
    const std::size_t dh = d / h;
    Vec heads_cat(nq * d, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        const Vec pa = matmul(a, w.heads[i].wa, nq, d, dh);
        const Vec pb = matmul(b, w.heads[i].wb, nk, d, dh);
        const Vec pc = matmul(c, w.heads[i].wc, nk, d, dh);
        const Vec head = attention_core(pa, pb, pc, nq, nk, dh, key_mask);
        for (std::size_t q = 0; q < nq; ++q)
            for (std::size_t x = 0; x < dh; ++x) heads_cat[q * d + i * dh + x] = head[q * dh + x];
    }
    return matmul(heads_cat, w.mix, nq, d, d);
}

Vec gate_coefficients(const Vec& a, const Vec& b,
                      std::size_t na, std::size_t nb, std::size_t d, std::size_t dg,
                      const GateWeights& w,
                      const std::vector<std::uint8_t>& b_mask) {
    // Pool B to one context row (mean over valid rows).
    Vec context(d, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        if (!b_mask.empty() && !b_mask[i]) continue;
        ++count;
        for (std::size_t j = 0; j < d; ++j) context[j] += b[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) context[j] *= 1.0 / static_cast<double>(count);

    const Vec ctx_proj = matmul(context, w.u_b, 1, d, dg);
    Vec hidden = matmul(a, w.u_a, na, d, dg);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < dg; ++j) {
            double v = hidden[i * dg + j] + ctx_proj[j];
            hidden[i * dg + j] = v > 0.0 ? v : 0.0;
        }
    }
    Vec pre = matmul(hidden, w.u_ab, na, dg, d);
    for (double& v : pre) v = 1.0 / (1.0 + std::exp(-v));
    return pre;
}

Vec cst_layer(const Vec& a, const Vec& b, const Vec& c,
              std::size_t na, std::size_t nb, std::size_t d, std::size_t dg,
              const MultiHeadWeights& attn, const std::vector<GateWeights>& gates,
              const std::vector<std::uint8_t>& key_mask) {
    const std::size_t h = attn.heads.size();
    const std::size_t dh = d / h;
    Vec heads_cat(na * d, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        const Vec omega = gate_coefficients(a, b, na, nb, d, dg, gates[i], key_mask);
        Vec gated(na * d);
        for (std::size_t x = 0; x < na * d; ++x) gated[x] = omega[x] * a[x];
        const Vec pa = matmul(gated, attn.heads[i].wa, na, d, dh);
        const Vec pb = matmul(b, attn.heads[i].wb, nb, d, dh);
        const Vec pc = matmul(c, attn.heads[i].wc, nb, d, dh);
        const Vec head = attention_core(pa, pb, pc, na, nb, dh, key_mask);
        for (std::size_t q = 0; q < na; ++q)
            for (std::size_t x = 0; x < dh; ++x) heads_cat[q * d + i * dh + x] = head[q * dh + x];
    }
    return matmul(heads_cat, attn.mix, na, d, d);
}

}  // namespace sgt::ref
