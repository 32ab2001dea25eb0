#pragma once

// Per-node numerical kernels of the distributed receiver/transmitter and the
// centralized reference they must reproduce.
//
// Conventions: node i holds row i of the M x K channel matrix H as a K-vector.
// The Gram matrix is B = H^H H = sum_i h_i^H h_i, so B(r, c) = sum_i conj(h_ir) h_ic.
// The node's decoding column of A = D H^H and its precoding row of W = A^T are the
// same K-vector D conj(h_i); for conjugate beamforming it is conj(h_i).
//
// Kernels take an optional PeCounter and add the processing-element operations
// they execute. Additions of child contributions share the PE operation of the
// local product and are not counted separately.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmimo/fft.hpp"
#include "dmimo/linalg.hpp"
#include "dmimo/params.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : std::runtime_error("Gram matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

class RankDeficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}
}  // namespace detail

/// Least-squares channel estimate from the orthogonal pilot X_p = p I.
inline ComplexVector estimate_channel(std::span<const cd> y_pilot, double p, PeCounter* ops = nullptr) {
  if (p == 0.0) throw std::invalid_argument("pilot amplitude must be nonzero");
  ComplexVector h(y_pilot.begin(), y_pilot.end());
  const double inv_p = 1.0 / p;
  for (auto& v : h) v *= inv_p;
  count(ops, h.size());
  return h;
}

/// h^H h for a channel row h, packed lower triangle.
inline PackedHermitian local_gram(std::span<const cd> h, PeCounter* ops = nullptr) {
  const std::size_t k = h.size();
  PackedHermitian b(k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < r; ++c) b.lower(r, c) = std::conj(h[r]) * h[c];
    b.lower(r, r) = std::norm(h[r]);
  }
  count(ops, PackedHermitian::packed_size(k));
  return b;
}

/// Sum of the children's partial Gram matrices (in the given order) plus the own term.
inline PackedHermitian accumulate_gram(const PackedHermitian& own, std::span<const PackedHermitian> children) {
  PackedHermitian sum(own.order());
  for (const auto& c : children) {
    if (c.order() != own.order()) throw std::invalid_argument("accumulate_gram: order mismatch");
    sum += c;
  }
  sum += own;
  return sum;
}

/// D = (B + r I)^-1 through a Cholesky factorization B + r I = L L^H, with r = 0
/// for ZF and r = mmse_reg for MMSE.
inline PackedHermitian invert_gram(const PackedHermitian& b, Mode mode, double mmse_reg) {
  if (mode == Mode::CB) throw std::invalid_argument("conjugate beamforming needs no inversion");
  const double reg = mode == Mode::MMSE ? mmse_reg : 0.0;
  const std::size_t k = b.order();

  double max_diag = 0;
  for (std::size_t j = 0; j < k; ++j) max_diag = std::max(max_diag, b.lower(j, j).real() + reg);
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(k) * max_diag;

  PackedHermitian l(k);
  for (std::size_t j = 0; j < k; ++j) {
    double d = b.lower(j, j).real() + reg;
    for (std::size_t c = 0; c < j; ++c) d -= std::norm(l.lower(j, c));
    if (!(d > tol) || !std::isfinite(d)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(d);
    l.lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      cd s = b.lower(i, j);
      for (std::size_t c = 0; c < j; ++c) s -= l.lower(i, c) * std::conj(l.lower(j, c));
      l.lower(i, j) = s / ljj;
    }
  }

  // L^-1, lower triangular, column by column.
  PackedHermitian linv(k);
  for (std::size_t j = 0; j < k; ++j) {
    linv.lower(j, j) = 1.0 / l.lower(j, j).real();
    for (std::size_t i = j + 1; i < k; ++i) {
      cd s = 0;
      for (std::size_t c = j; c < i; ++c) s += l.lower(i, c) * linv.lower(c, j);
      linv.lower(i, j) = -s / l.lower(i, i).real();
    }
  }

  // D = L^-H L^-1
  PackedHermitian d(k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < r; ++c) {
      cd s = 0;
      for (std::size_t t = r; t < k; ++t) s += std::conj(linv.lower(t, r)) * linv.lower(t, c);
      d.lower(r, c) = s;
    }
    double s = 0;
    for (std::size_t t = r; t < k; ++t) s += std::norm(linv.lower(t, r));
    d.lower(r, r) = s;
  }
  return d;
}

/// D v. With v = conj(h_i) this is the node's decoding column A_i, which is
/// stored once and also used as the precoding row W_i.
inline ComplexVector local_weights(const PackedHermitian& d, std::span<const cd> v, PeCounter* ops = nullptr) {
  const std::size_t k = d.order();
  detail::require_same_length(k, v.size(), "local_weights");
  ComplexVector out(k);
  for (std::size_t r = 0; r < k; ++r) {
    cd s = 0;
    for (std::size_t c = 0; c < k; ++c) s += d(r, c) * v[c];
    out[r] = s;
  }
  count(ops, k * k);
  return out;
}

/// One subcarrier of the uplink accumulation: children's partial sums (in order) plus A_i y_i.
inline ComplexVector decode_local(std::span<const cd> a, cd y, std::span<const ComplexVector> children,
                                  PeCounter* ops = nullptr) {
  ComplexVector out(a.size());
  for (const auto& c : children) {
    detail::require_same_length(a.size(), c.size(), "decode_local");
    for (std::size_t k = 0; k < a.size(); ++k) out[k] += c[k];
  }
  for (std::size_t k = 0; k < a.size(); ++k) out[k] += a[k] * y;
  count(ops, a.size());
  return out;
}

/// In-place form of decode_local for callers that already summed the children into `acc`.
inline void decode_accumulate(std::span<const cd> a, cd y, std::span<cd> acc, PeCounter* ops = nullptr) {
  detail::require_same_length(a.size(), acc.size(), "decode_accumulate");
  for (std::size_t k = 0; k < a.size(); ++k) acc[k] += a[k] * y;
  count(ops, a.size());
}

/// One subcarrier of downlink precoding: x_i = sum_j W_i[j] q[j], no conjugation.
inline cd precode_local(std::span<const cd> w, std::span<const cd> q, PeCounter* ops = nullptr) {
  detail::require_same_length(w.size(), q.size(), "precode_local");
  cd x = 0;
  for (std::size_t j = 0; j < w.size(); ++j) x += w[j] * q[j];
  count(ops, w.size());
  return x;
}

/// Local weight vector for node row h: conj(h) for CB, D conj(h) otherwise.
inline ComplexVector node_weights(const PackedHermitian* d, std::span<const cd> h, Mode mode,
                                  PeCounter* ops = nullptr) {
  ComplexVector hc(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) hc[i] = std::conj(h[i]);
  if (mode == Mode::CB) return hc;
  if (!d) throw std::invalid_argument("node_weights: inverse required");
  return local_weights(*d, hc, ops);
}

struct CentralizedWeights {
  ComplexMatrix A;  // K x M decoding matrix
  ComplexMatrix W;  // M x K precoding matrix
};

/// Dense reference: A = H^H (CB) or (H^H H + r I)^-1 H^H (ZF/MMSE), and
/// W = H* (CB) or H* ((H^H H + r I)^-1)*. The inverse uses Gauss-Jordan
/// elimination with partial pivoting, independent of the packed Cholesky path.
inline CentralizedWeights centralized_reference(const ComplexMatrix& h, Mode mode, double mmse_reg) {
  const std::size_t m = h.rows(), k = h.cols();
  const ComplexMatrix hh = h.adjoint();
  if (mode == Mode::CB) return {hh, h.conj()};

  const double reg = mode == Mode::MMSE ? mmse_reg : 0.0;
  ComplexMatrix g = hh * h;
  for (std::size_t i = 0; i < k; ++i) g(i, i) += reg;

  double scale = 0;
  for (const auto& v : g.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-13 * static_cast<double>(k) * scale;

  ComplexMatrix inv = ComplexMatrix::identity(k);
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(g(r, col)) > std::abs(g(piv, col))) piv = r;
    if (!(std::abs(g(piv, col)) > tol))
      throw RankDeficient("channel matrix is rank deficient (column " + std::to_string(col) + ")");
    if (piv != col)
      for (std::size_t c = 0; c < k; ++c) {
        std::swap(g(piv, c), g(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
    const cd p = g(col, col);
    for (std::size_t c = 0; c < k; ++c) {
      g(col, c) /= p;
      inv(col, c) /= p;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const cd f = g(r, col);
      if (f == cd{}) continue;
      for (std::size_t c = 0; c < k; ++c) {
        g(r, c) -= f * g(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  (void)m;
  return {inv * hh, h.conj() * inv.conj()};
}

// ---------------------------------------------------------------------------
// Untimed tree pipeline, used for functional cross-checks.

struct DistributedWeights {
  PackedHermitian gram;         // as received by the CCU
  std::optional<PackedHermitian> inverse;
  ComplexMatrix W;              // row i = node i's weight vector
};

/// Accumulates the Gram matrix up `tree`, inverts it centrally and computes every
/// node's weight vector from the broadcast inverse.
inline DistributedWeights distributed_weights(const ComplexMatrix& h, const TreeTopology& tree, Mode mode,
                                              double mmse_reg) {
  const std::size_t m = h.rows(), k = h.cols();
  if (static_cast<std::size_t>(tree.size()) != m) throw std::invalid_argument("tree size != channel rows");
  std::vector<PackedHermitian> partial(m);
  for (int n : tree.bottom_up_order()) {
    std::vector<PackedHermitian> kids;
    for (int c : tree.children(n)) kids.push_back(partial[c]);
    partial[n] = accumulate_gram(local_gram(h.row(n)), kids);
  }
  DistributedWeights out{partial[tree.root()], std::nullopt, ComplexMatrix(m, k)};
  if (mode != Mode::CB) out.inverse = invert_gram(out.gram, mode, mmse_reg);
  for (std::size_t n = 0; n < m; ++n) {
    auto w = node_weights(out.inverse ? &*out.inverse : nullptr, h.row(n), mode);
    std::copy(w.begin(), w.end(), out.W.row(n).begin());
  }
  return out;
}

/// A y accumulated up the tree, one antenna sample per node.
inline ComplexVector distributed_decode(const ComplexMatrix& weights, std::span<const cd> y, const TreeTopology& tree) {
  const std::size_t m = weights.rows();
  detail::require_same_length(m, y.size(), "distributed_decode");
  std::vector<ComplexVector> partial(m);
  for (int n : tree.bottom_up_order()) {
    std::vector<ComplexVector> kids;
    for (int c : tree.children(n)) kids.push_back(partial[c]);
    partial[n] = decode_local(weights.row(n), y[n], kids);
  }
  return partial[tree.root()];
}

}  // namespace dmimo
