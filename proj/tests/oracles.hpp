#pragma once

// Reference computations for the tests. Dense algebra goes through Eigen and
// the DFT is the O(N^2) sum, so neither shares code with the library.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dmimo/linalg.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using dmimo::cd;

inline Mat to_eigen(const dmimo::ComplexMatrix& m) {
  Mat e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

inline Vec to_eigen(std::span<const cd> v) {
  Vec e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e(i) = v[i];
  return e;
}

inline Mat to_eigen(const dmimo::PackedHermitian& p) { return to_eigen(p.to_dense()); }

inline dmimo::ComplexMatrix from_eigen(const Mat& e) {
  dmimo::ComplexMatrix m(e.rows(), e.cols());
  for (Eigen::Index r = 0; r < e.rows(); ++r)
    for (Eigen::Index c = 0; c < e.cols(); ++c) m(r, c) = e(r, c);
  return m;
}

inline double rel_fro(const Mat& got, const Mat& ref) {
  const double den = ref.norm();
  return den > 0 ? (got - ref).norm() / den : got.norm();
}

inline dmimo::ComplexMatrix random_matrix(std::mt19937_64& g, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  dmimo::ComplexMatrix m(rows, cols);
  for (auto& v : m.data()) v = {n(g), n(g)};
  return m;
}

inline dmimo::ComplexVector random_vector(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> d(0.0, std::sqrt(0.5));
  dmimo::ComplexVector v(n);
  for (auto& x : v) x = {d(g), d(g)};
  return v;
}

/// Centralized decoding matrix (K x M): H^H for CB, (H^H H + r I)^-1 H^H otherwise.
inline Mat decoding_matrix(const Mat& h, bool conjugate_beamforming, double reg) {
  if (conjugate_beamforming) return h.adjoint();
  Mat g = h.adjoint() * h;
  g += reg * Mat::Identity(h.cols(), h.cols());
  return g.ldlt().solve(h.adjoint());
}

inline std::vector<cd> naive_dft(const std::vector<cd>& x, bool inverse) {
  const std::size_t n = x.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

}  // namespace oracle
