#pragma once

// Operation counts, operations-per-sample requirements, inversion-time
// thresholds, clock selection, slack, memory and link figures.
//
// One "operation" is one PE invocation: a complex multiply with its
// accompanying additions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmimo/fft.hpp"
#include "dmimo/params.hpp"

namespace dmimo {

struct OpCounts {
  std::int64_t ce = 0;           // channel estimate, K
  std::int64_t gram = 0;         // B_i, K(K+1)/2
  std::int64_t decode = 0;       // ytilde_i per symbol, N_SC K
  std::int64_t precode = 0;      // x_i per symbol, N_SC K
  std::int64_t weights_product = 0;  // W_i = D conj(h_i), K^2
  std::int64_t fft = 0;          // (N_FFT/2) log2 N_FFT

  std::int64_t weights = 0;      // pilot FFT through W_i
  std::int64_t ul = 0;           // one uplink symbol: FFT + decode
  std::int64_t dl = 0;           // one downlink symbol: precode + IFFT
  std::int64_t ofdm = 0;         // either of the above

  /// Operations per node per frame.
  std::int64_t per_frame(const SystemParams& p) const { return weights + (p.n_ul() + p.n_dl) * ofdm; }
};

inline std::int64_t fft_ops(std::int64_t n_fft) {
  if (!is_power_of_two(static_cast<std::size_t>(n_fft)))
    throw std::invalid_argument("N_FFT must be a power of two, got " + std::to_string(n_fft));
  return n_fft / 2 * std::countr_zero(static_cast<std::uint64_t>(n_fft));
}

inline OpCounts op_counts(const SystemParams& p) {
  const std::int64_t k = p.K;
  OpCounts c;
  c.ce = k;
  c.fft = fft_ops(p.n_fft);
  c.decode = static_cast<std::int64_t>(p.n_sc) * k;
  c.precode = c.decode;
  if (uses_inverse(p.mode)) {
    c.gram = k * (k + 1) / 2;
    c.weights_product = k * k;
  }
  c.weights = c.fft + c.ce + c.gram + c.weights_product;
  c.ul = c.fft + c.decode;
  c.dl = c.precode + c.fft;
  c.ofdm = c.ul;
  return c;
}

/// Per-symbol and per-frame load in operations, real-valued so that scaled
/// (non power of two) FFT sizes can be evaluated.
struct OpLoad {
  double weights = 0;
  double ofdm = 0;
};

inline OpLoad op_load(const OpCounts& c) {
  return {static_cast<double>(c.weights), static_cast<double>(c.ofdm)};
}

/// Everything the requirement formulas depend on.
struct DimensioningPoint {
  OpLoad load;
  Mode mode = Mode::ZF;
  double t_ofdm = 0;
  double f_sample = 0;
  double t_link = 0;
  double t_inv = 0;
  int n_ul1 = 0, n_ul2 = 0, n_dl = 0;
  int n_hops = 1;
  int n_ul_pb = 0;  // uplink symbols processed ahead of the downlink burst

  int n_ul() const { return n_ul1 + n_ul2; }
  double t_frame() const { return (n_ul1 + n_ul2 + n_dl + 3) * t_ofdm; }
  double total_ops() const { return load.weights + (n_ul() + n_dl) * load.ofdm; }
};

inline DimensioningPoint make_point(const SystemParams& p, int n_hops, int n_ul_pb = 0) {
  DimensioningPoint d;
  d.load = op_load(op_counts(p));
  d.mode = p.mode;
  d.t_ofdm = p.t_ofdm;
  d.f_sample = p.f_sample;
  d.t_link = p.t_link;
  d.t_inv = p.t_inv;
  d.n_ul1 = p.n_ul1;
  d.n_ul2 = p.n_ul2;
  d.n_dl = p.n_dl;
  d.n_hops = n_hops;
  d.n_ul_pb = n_ul_pb;
  return d;
}

inline double nops_avg(const DimensioningPoint& d) { return d.total_ops() / (d.t_frame() * d.f_sample); }

inline double nops_asymptotic(const DimensioningPoint& d) { return d.load.ofdm / (d.t_ofdm * d.f_sample); }

struct CriticalRow {
  int symbol = 0;         // downlink symbol i, 1-based
  double ops = 0;         // N_op,CP,i
  double t_cp = 0;        // pilot end to deadline of symbol i
  double available = 0;   // t_cp minus inversion and hop transit
  double ratio = 0;       // +inf when available <= 0
};

struct CriticalPath {
  std::vector<CriticalRow> rows;
  double max = 0;
  int argmax = 0;                         // 0 when there are no downlink symbols
  std::optional<int> unmeetable_symbol;   // first symbol with no time left
};

/// Time consumed on the critical path outside the node: inversion plus the
/// round trip to the CCU. Conjugate beamforming needs neither.
inline double critical_overhead(const DimensioningPoint& d) {
  if (!uses_inverse(d.mode)) return 0.0;
  return d.t_inv + 2.0 * d.n_hops * d.t_link;
}

/// Per-downlink-symbol requirement table. Never throws.
inline CriticalPath critical_path_table(const DimensioningPoint& d) {
  CriticalPath cp;
  const double overhead = critical_overhead(d);
  for (int i = 1; i <= d.n_dl; ++i) {
    CriticalRow r;
    r.symbol = i;
    r.ops = d.load.weights + (i + d.n_ul_pb) * d.load.ofdm;
    r.t_cp = d.t_ofdm * (d.n_ul2 + i);
    r.available = r.t_cp - overhead;
    if (r.available > 0) {
      r.ratio = r.ops / (r.available * d.f_sample);
    } else {
      r.ratio = std::numeric_limits<double>::infinity();
      if (!cp.unmeetable_symbol) cp.unmeetable_symbol = i;
    }
    if (cp.argmax == 0 || r.ratio > cp.max) {
      cp.max = r.ratio;
      cp.argmax = i;
    }
    cp.rows.push_back(r);
  }
  return cp;
}

class UnmeetableDeadline : public std::runtime_error {
 public:
  explicit UnmeetableDeadline(int symbol)
      : std::runtime_error("no processing time left before the deadline of downlink symbol " +
                           std::to_string(symbol)),
        symbol_(symbol) {}
  int symbol() const { return symbol_; }

 private:
  int symbol_;
};

/// Critical-path requirement; throws UnmeetableDeadline if some symbol has no time left.
inline CriticalPath nops_critical(const DimensioningPoint& d) {
  auto cp = critical_path_table(d);
  if (cp.unmeetable_symbol) throw UnmeetableDeadline(*cp.unmeetable_symbol);
  return cp;
}

/// max(average, critical); +inf if a deadline cannot be met at any rate.
inline double nops_required(const DimensioningPoint& d) {
  return std::max(nops_avg(d), critical_path_table(d).max);
}

/// Inversion time at which the last downlink symbol's critical path starts to
/// exceed the frame average. Undefined without an inversion or downlink symbols.
inline std::optional<double> t_inv_a(const DimensioningPoint& d) {
  if (!uses_inverse(d.mode) || d.n_dl == 0) return std::nullopt;
  const double ops_cp = d.load.weights + (d.n_dl + d.n_ul_pb) * d.load.ofdm;
  return d.t_ofdm * (d.n_ul2 + d.n_dl) - ops_cp / d.total_ops() * d.t_frame() - 2.0 * d.n_hops * d.t_link;
}

/// Inversion time at which every downlink symbol's critical ratio equals the
/// asymptotic per-symbol rate. Negative values mean the inversion would have
/// to finish before the pilot.
inline std::optional<double> t_inv_b(const DimensioningPoint& d) {
  if (!uses_inverse(d.mode) || d.load.ofdm <= 0) return std::nullopt;
  return d.t_ofdm * (d.n_ul2 - d.n_ul_pb - d.load.weights / d.load.ofdm) - 2.0 * d.n_hops * d.t_link;
}

struct PeClock {
  int n_pe = 1;
  int multiple = 0;  // f_clk / f_sample
  double f_clk = 0;
  int n_hat = 0;     // N_PE * multiple, operations available per sample
};

/// Smallest clock that is an integer multiple of the sample rate and gives
/// N_PE * multiple >= n_ops.
inline PeClock select_pe_clock(double n_ops, int n_pe, double f_sample) {
  if (n_pe < 1) throw std::invalid_argument("N_PE must be >= 1");
  if (!std::isfinite(n_ops)) throw std::invalid_argument("operation requirement is unbounded");
  // The 1e-9 guard keeps an exactly-integer requirement from rounding up.
  int m = static_cast<int>(std::ceil(n_ops / n_pe - 1e-9));
  m = std::max(m, 1);
  return {n_pe, m, m * f_sample, n_pe * m};
}

// ---------------------------------------------------------------------------
// Slack at a fixed N_hat

inline constexpr int kUnbounded = std::numeric_limits<int>::max();

struct SlackReport {
  double max_t_inv = 0;  // +inf without downlink symbols, -inf if the average alone exceeds N_hat
  int max_k = 0;
  int max_n_hops = 0;    // kUnbounded for T_link = 0, -1 if infeasible at zero hops
  int n_ul_pb = 0;
};

namespace detail {

// min over i of the time left on the critical path once processing at rate
// n_hat * f_sample is subtracted. +inf without downlink symbols.
inline double min_critical_margin(const DimensioningPoint& d, double n_hat, double overhead) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= d.n_dl; ++i) {
    const double ops = d.load.weights + (i + d.n_ul_pb) * d.load.ofdm;
    m = std::min(m, d.t_ofdm * (d.n_ul2 + i) - overhead - ops / (n_hat * d.f_sample));
  }
  return m;
}

inline bool fits(const DimensioningPoint& d, double n_hat) {
  return nops_required(d) <= n_hat * (1 + 1e-12);
}

}  // namespace detail

/// Largest T_inv keeping the requirement within n_hat.
inline double max_t_inv(const DimensioningPoint& d, int n_hat) {
  if (nops_avg(d) > n_hat * (1 + 1e-12)) return -std::numeric_limits<double>::infinity();
  return detail::min_critical_margin(d, n_hat, 2.0 * d.n_hops * d.t_link);
}

/// Largest hop count keeping the requirement within n_hat.
inline int max_n_hops(const DimensioningPoint& d, int n_hat) {
  if (nops_avg(d) > n_hat * (1 + 1e-12)) return -1;
  const double overhead = uses_inverse(d.mode) ? d.t_inv : 0.0;
  const double margin = detail::min_critical_margin(d, n_hat, overhead);
  if (!uses_inverse(d.mode) || d.t_link <= 0 || std::isinf(margin)) return margin >= 0 ? kUnbounded : -1;
  if (margin < 0) return -1;
  const double h = std::floor(margin / (2.0 * d.t_link) + 1e-9);
  return h >= kUnbounded ? kUnbounded : static_cast<int>(h);
}

/// Largest uplink count that can be processed ahead of the downlink burst.
inline int max_n_ul_pb(DimensioningPoint d, int n_hat) {
  int best = 0;
  for (int pb = 0; pb <= d.n_ul(); ++pb) {
    d.n_ul_pb = pb;
    if (!detail::fits(d, n_hat)) break;
    best = pb;
  }
  return best;
}

/// T_inv for K terminals when the inversion time grows cubically from (k0, t0).
inline double cubic_t_inv(double t0, int k0, int k) {
  const double r = static_cast<double>(k) / k0;
  return t0 * r * r * r;
}

/// Largest K (searched upwards from 1, stopping at the first failure) whose
/// requirement fits n_hat, with T_inv scaled cubically from p's (K, T_inv).
/// ZF and MMSE stop at K = M.
inline int max_terminals_at(const SystemParams& p, int n_hops, int n_hat, int k_limit = 4096) {
  if (uses_inverse(p.mode)) k_limit = std::min(k_limit, p.M);
  int best = 0;
  for (int k = 1; k <= k_limit; ++k) {
    SystemParams q = p;
    q.K = k;
    q.t_inv = cubic_t_inv(p.t_inv, p.K, k);
    if (!detail::fits(make_point(q, n_hops), n_hat)) break;
    best = k;
  }
  return best;
}

inline SlackReport slack_analysis(const SystemParams& p, int n_hops, int n_hat) {
  const auto d = make_point(p, n_hops);
  SlackReport s;
  s.max_t_inv = max_t_inv(d, n_hat);
  s.max_k = max_terminals_at(p, n_hops, n_hat);
  s.max_n_hops = max_n_hops(d, n_hat);
  s.n_ul_pb = max_n_ul_pb(d, n_hat);
  return s;
}

// ---------------------------------------------------------------------------
// Memory and link

struct MemoryReport {
  int n_ul_buffered = 0;
  std::int64_t input_bits = 0;
  std::int64_t processing_bits = 0;
  std::int64_t output_bits = 0;
  std::int64_t channel_estimate_bits = 0;
  std::int64_t weights_bits = 0;
  std::int64_t twiddle_words = 0;

  std::int64_t buffer_bits() const { return input_bits + processing_bits + output_bits; }
  std::int64_t vector_bits() const { return channel_estimate_bits + weights_bits; }
  std::int64_t total_bits() const { return buffer_bits() + vector_bits(); }
};

inline MemoryReport memory_report(const SystemParams& p, int n_ul_pb) {
  if (n_ul_pb < 0 || n_ul_pb > p.n_ul()) throw std::invalid_argument("N_UL,PB out of range");
  MemoryReport m;
  m.n_ul_buffered = p.n_ul() - n_ul_pb;
  m.input_bits = static_cast<std::int64_t>(m.n_ul_buffered) * p.n_fft * p.w_adc;
  m.processing_bits = static_cast<std::int64_t>(p.n_fft) * p.w_comp;
  m.output_bits = static_cast<std::int64_t>(p.n_fft) * p.w_dac;
  m.channel_estimate_bits = static_cast<std::int64_t>(p.K) * p.w_comp;
  m.weights_bits = static_cast<std::int64_t>(p.K) * p.w_comp;
  m.twiddle_words = p.n_fft / 2;
  return m;
}

struct LinkReport {
  std::int64_t bits_up = 0;     // per frame, per link
  std::int64_t bits_down = 0;
  double min_rate_up = 0;       // bits / T_frame
  double min_rate_down = 0;
  double matched_rate_up = 0;   // N_hat f_sample W_comp
  double matched_rate_down = 0; // N_hat f_sample W_symbol
  double throughput_up = 0;     // terminal payload, bit/s
  double throughput_down = 0;
};

/// Conjugate beamforming sends no Gram matrix up and no inverse down.
inline LinkReport link_report(const SystemParams& p, int n_hat) {
  const std::int64_t gram = uses_inverse(p.mode) ? static_cast<std::int64_t>(p.K) * (p.K + 1) / 2 : 0;
  LinkReport l;
  l.bits_up = (gram + static_cast<std::int64_t>(p.n_ul()) * p.n_sc) * p.w_comp;
  l.bits_down = gram * p.w_comp + static_cast<std::int64_t>(p.n_dl) * p.n_sc * p.w_symbol;
  const double tf = p.t_frame();
  l.min_rate_up = l.bits_up / tf;
  l.min_rate_down = l.bits_down / tf;
  l.matched_rate_up = n_hat * p.f_sample * p.w_comp;
  l.matched_rate_down = n_hat * p.f_sample * p.w_symbol;
  const double per_symbol = static_cast<double>(p.n_sc) * p.K * p.w_symbol;
  l.throughput_up = per_symbol * p.n_ul() / tf;
  l.throughput_down = per_symbol * p.n_dl / tf;
  return l;
}

// ---------------------------------------------------------------------------

struct DimensioningReport {
  SystemParams params;
  int n_hops = 0;
  OpCounts ops;
  double nops_avg = 0;
  CriticalPath critical;
  double nops = 0;
  double nops_asymptotic = 0;
  std::optional<double> t_inv_a;
  std::optional<double> t_inv_b;
  PeClock clock;
  SlackReport slack;
  int n_ul_pb = 0;
  MemoryReport memory;
  LinkReport link;
};

/// Full report. N_UL,PB defaults to the largest value the chosen clock allows;
/// an explicit value is part of the requirement the clock is sized for.
inline DimensioningReport dimension(const SystemParams& p, int n_hops, std::optional<int> n_ul_pb = std::nullopt) {
  if (n_ul_pb && (*n_ul_pb < 0 || *n_ul_pb > p.n_ul())) throw std::invalid_argument("N_UL,PB out of range");
  DimensioningReport r;
  r.params = p;
  r.n_hops = n_hops;
  r.ops = op_counts(p);
  const auto d = make_point(p, n_hops, n_ul_pb.value_or(0));
  r.nops_avg = nops_avg(d);
  r.critical = critical_path_table(d);
  r.nops = std::max(r.nops_avg, r.critical.max);
  r.nops_asymptotic = nops_asymptotic(d);
  r.t_inv_a = t_inv_a(d);
  r.t_inv_b = t_inv_b(d);
  if (r.critical.unmeetable_symbol) throw UnmeetableDeadline(*r.critical.unmeetable_symbol);
  r.clock = select_pe_clock(r.nops, p.n_pe, p.f_sample);
  r.slack = slack_analysis(p, n_hops, r.clock.n_hat);
  r.n_ul_pb = n_ul_pb.value_or(r.slack.n_ul_pb);
  r.memory = memory_report(p, r.n_ul_pb);
  r.link = link_report(p, r.clock.n_hat);
  return r;
}

}  // namespace dmimo
