#pragma once

// Small dense complex containers used by the baseband kernels, plus the
// row-major `re,im` CSV form used for golden files.

#include <complex>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmimo {

using cd = std::complex<double>;
using ComplexVector = std::vector<cd>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  cd& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cd& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<cd> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const cd> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<cd>& data() const { return data_; }
  std::vector<cd>& data() { return data_; }

  ComplexMatrix transpose() const {
    ComplexMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  ComplexMatrix conj() const {
    ComplexMatrix t = *this;
    for (auto& v : t.data_) v = std::conj(v);
    return t;
  }

  ComplexMatrix adjoint() const { return transpose().conj(); }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> data_;
};

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product dimension mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cd aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline ComplexVector operator*(const ComplexMatrix& a, std::span<const cd> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector dimension mismatch");
  ComplexVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) out[i] += a(i, k) * x[k];
  return out;
}

/// Hermitian K x K matrix stored as its lower triangle, K(K+1)/2 entries, row by row.
class PackedHermitian {
 public:
  PackedHermitian() = default;
  explicit PackedHermitian(std::size_t order) : order_(order), data_(packed_size(order)) {}

  static constexpr std::size_t packed_size(std::size_t k) { return k * (k + 1) / 2; }
  static constexpr std::size_t index(std::size_t r, std::size_t c) { return r * (r + 1) / 2 + c; }

  static PackedHermitian identity(std::size_t k) {
    PackedHermitian m(k);
    for (std::size_t i = 0; i < k; ++i) m.lower(i, i) = 1.0;
    return m;
  }

  /// Takes the lower triangle of `dense`; the upper triangle is ignored.
  static PackedHermitian from_dense(const ComplexMatrix& dense) {
    if (dense.rows() != dense.cols()) throw std::invalid_argument("Hermitian matrix must be square");
    PackedHermitian m(dense.rows());
    for (std::size_t r = 0; r < m.order(); ++r)
      for (std::size_t c = 0; c <= r; ++c) m.lower(r, c) = dense(r, c);
    return m;
  }

  std::size_t order() const { return order_; }
  std::span<const cd> packed() const { return data_; }
  std::span<cd> packed() { return data_; }

  /// Lower-triangle element, r >= c.
  cd& lower(std::size_t r, std::size_t c) { return data_[index(r, c)]; }
  const cd& lower(std::size_t r, std::size_t c) const { return data_[index(r, c)]; }

  cd operator()(std::size_t r, std::size_t c) const {
    return r >= c ? data_[index(r, c)] : std::conj(data_[index(c, r)]);
  }

  ComplexMatrix to_dense() const {
    ComplexMatrix d(order_, order_);
    for (std::size_t r = 0; r < order_; ++r)
      for (std::size_t c = 0; c < order_; ++c) d(r, c) = (*this)(r, c);
    return d;
  }

  PackedHermitian& operator+=(const PackedHermitian& other) {
    if (other.order_ != order_) throw std::invalid_argument("Hermitian order mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  friend bool operator==(const PackedHermitian&, const PackedHermitian&) = default;

 private:
  std::size_t order_ = 0;
  std::vector<cd> data_;
};

// ---------------------------------------------------------------------------
// CSV: one matrix row per line, each entry written as `re,im`.

inline void write_csv(std::ostream& os, const ComplexMatrix& m) {
  auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << m(r, c).real() << ',' << m(r, c).imag();
    }
    os << '\n';
  }
  os.precision(old);
}

inline void write_csv(std::ostream& os, std::span<const cd> v) {
  ComplexMatrix m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  write_csv(os, m);
}

inline ComplexMatrix read_csv(std::istream& is) {
  std::vector<std::vector<cd>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() % 2) throw std::invalid_argument("CSV row has an odd number of fields");
    std::vector<cd> row;
    for (std::size_t i = 0; i < vals.size(); i += 2) row.emplace_back(vals[i], vals[i + 1]);
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("CSV rows differ in length");
    rows.push_back(std::move(row));
  }
  ComplexMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace dmimo
