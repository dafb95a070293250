#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sgt::ref {

// Scalar reference implementations of the attention and gating math, written
// against flat std::vector<double> buffers with explicit loops. They share no
// code with the tensor kernels or the tape and exist so the real
// implementations can be checked against an independent path.

using Vec = std::vector<double>;

// c[m x n] = a[m x k] * b[k x n], k accumulated in ascending order.
Vec matmul(const Vec& a, const Vec& b, std::size_t m, std::size_t k, std::size_t n);

// One softmax lane with the padded-attention contract: -1e9 sentinel on
// masked entries, max subtraction, exact zeros on masked outputs.
// mask may be empty (no padding).
Vec softmax_row(const Vec& logits, const std::vector<std::uint8_t>& mask);

// softmax(A B^T / sqrt(d_head)) C for A[nq x dh], B[nk x dh], C[nk x dh].
Vec attention_core(const Vec& a, const Vec& b, const Vec& c,
                   std::size_t nq, std::size_t nk, std::size_t dh,
                   const std::vector<std::uint8_t>& key_mask);

// Per-head projection weights for the reference multi-head path.
struct HeadWeights {
    Vec wa, wb, wc;  // each d x dh
};

struct MultiHeadWeights {
    std::vector<HeadWeights> heads;
    Vec mix;  // (h*dh) x d output mixer
};

// Plain multi-head attention, no residual/norm/feed-forward scaffolding.
Vec multi_head(const Vec& a, const Vec& b, const Vec& c,
               std::size_t nq, std::size_t nk, std::size_t d,
               const MultiHeadWeights& w,
               const std::vector<std::uint8_t>& key_mask);

struct GateWeights {
    Vec u_a;   // d x dg
    Vec u_b;   // d x dg
    Vec u_ab;  // dg x d
};

// omega = sigmoid(relu(A U_A + mean_rows(B) U_B) U_AB), one gate per A row.
Vec gate_coefficients(const Vec& a, const Vec& b,
                      std::size_t na, std::size_t nb, std::size_t d, std::size_t dg,
                      const GateWeights& w,
                      const std::vector<std::uint8_t>& b_mask);

// Coordinated-segregation layer: head i attends ((omega_i * A) Wa_i, B Wb_i, C Wc_i),
// heads concatenated and mixed. No scaffolding.
Vec cst_layer(const Vec& a, const Vec& b, const Vec& c,
              std::size_t na, std::size_t nb, std::size_t d, std::size_t dg,
              const MultiHeadWeights& attn, const std::vector<GateWeights>& gates,
              const std::vector<std::uint8_t>& key_mask);

}  // namespace sgt::ref
