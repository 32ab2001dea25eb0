#pragma once

// Radix-2 decimation-in-time FFT. Every butterfly multiplies its lower input by a
// twiddle factor and then adds/subtracts, which is one processing-element
// operation; a transform costs (N/2) log2 N of them.

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include "dmimo/linalg.hpp"

namespace dmimo {

/// Running tally of processing-element invocations.
struct PeCounter {
  std::uint64_t ops = 0;
  void add(std::uint64_t n) { ops += n; }
};

inline void count(PeCounter* c, std::uint64_t n) {
  if (c) c->add(n);
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && std::has_single_bit(n); }

class Radix2Fft {
 public:
  explicit Radix2Fft(std::size_t n) : n_(n) {
    if (!is_power_of_two(n))
      throw std::invalid_argument("radix-2 FFT length must be a power of two, got " + std::to_string(n));
    log2n_ = static_cast<unsigned>(std::countr_zero(n));
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const { return n_; }
  std::span<const cd> twiddles() const { return twiddles_; }
  std::uint64_t ops_per_transform() const { return static_cast<std::uint64_t>(n_ / 2) * log2n_; }

  /// In-place transform. The inverse is scaled by 1/N. Returns the butterflies executed.
  std::uint64_t transform(std::span<cd> x, bool inverse) const {
    if (x.size() != n_) throw std::invalid_argument("FFT input length does not match plan");
    if (n_ == 1) return 0;
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(x[i], x[j]);
    }
    std::uint64_t butterflies = 0;
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t base = 0; base < n_; base += len) {
        for (std::size_t j = 0; j < half; ++j) {
          cd w = twiddles_[j * stride];
          if (inverse) w = std::conj(w);
          const cd t = w * x[base + j + half];
          const cd u = x[base + j];
          x[base + j] = u + t;
          x[base + j + half] = u - t;
          ++butterflies;
        }
      }
    }
    if (inverse) {
      const double scale = 1.0 / static_cast<double>(n_);
      for (auto& v : x) v *= scale;
    }
    return butterflies;
  }

 private:
  std::size_t n_;
  unsigned log2n_ = 0;
  ComplexVector twiddles_;  // ROM: e^{-2 pi i k / N}, k < N/2
};

/// Shared plan per length. Plans are built once and never modified afterwards.
inline const Radix2Fft& fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<const Radix2Fft>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    try {
      slot = std::make_unique<const Radix2Fft>(n);
    } catch (...) {
      cache.erase(n);
      throw;
    }
  }
  return *slot;
}

inline ComplexVector fft_dit(ComplexVector x, bool inverse, PeCounter* ops = nullptr) {
  const auto& plan = fft_plan(x.size());
  count(ops, plan.transform(x, inverse));
  return x;
}

}  // namespace dmimo
