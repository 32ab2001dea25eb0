#pragma once

// Feasibility over bandwidth, terminal count and clock frequency. Bandwidth
// scales N_FFT, N_SC and f_sample linearly from the base system; the scaled
// N_FFT stays real-valued and the FFT cost uses a real log2.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dmimo/dimensioning.hpp"
#include "dmimo/params.hpp"

namespace dmimo {

enum class LoadModel { Asymptotic, Framed };

/// How T_inv follows K in framed mode. CubicScaling grows the base T_inv with
/// (K / K_base)^3; BelowThresholdA assumes T_inv never exceeds T_inv,A, so only
/// the frame average binds.
enum class InversionModel { CubicScaling, BelowThresholdA };

enum class Limiter { Average, Critical, Deadline, Asymptotic };

inline std::string_view to_string(Limiter l) {
  switch (l) {
    case Limiter::Average: return "avg";
    case Limiter::Critical: return "critical";
    case Limiter::Deadline: return "deadline";
    case Limiter::Asymptotic: return "asymptotic";
  }
  return "?";
}

inline std::string_view to_string(LoadModel m) { return m == LoadModel::Asymptotic ? "asymptotic" : "framed"; }

inline LoadModel parse_load_model(std::string_view s) {
  if (s == "asymptotic") return LoadModel::Asymptotic;
  if (s == "framed") return LoadModel::Framed;
  throw std::invalid_argument("unknown load model '" + std::string(s) + "'");
}

struct GridSpec {
  std::vector<double> bandwidths_hz;
  std::vector<int> ks;
  std::vector<double> f_clks_hz;
  int n_pe = 1;
  double base_bandwidth_hz = 20e6;
  LoadModel model = LoadModel::Framed;
  InversionModel inversion = InversionModel::CubicScaling;
};

struct GridCell {
  double bandwidth_hz = 0;
  int k = 0;
  double f_clk_hz = 0;
  double nops_required = 0;
  double capacity = 0;  // N_PE f_clk / f_sample
  bool feasible = false;
  Limiter limiter = Limiter::Average;
};

struct FeasibilityGrid {
  GridSpec spec;
  std::vector<GridCell> cells;  // bandwidth-major, then K, then f_clk

  const GridCell& at(std::size_t b, std::size_t k, std::size_t f) const {
    return cells[(b * spec.ks.size() + k) * spec.f_clks_hz.size() + f];
  }
};

struct ScaledSystem {
  double n_fft = 0;
  double n_sc = 0;
  double f_sample = 0;
};

inline ScaledSystem scale_bandwidth(const SystemParams& base, double bandwidth_hz, double base_bandwidth_hz) {
  const double s = bandwidth_hz / base_bandwidth_hz;
  return {base.n_fft * s, base.n_sc * s, base.f_sample * s};
}

/// Requirement and limiting constraint for K terminals on a scaled system.
inline GridCell evaluate_cell(const SystemParams& base, int n_hops, const ScaledSystem& sys, int k, LoadModel model,
                              InversionModel inv) {
  const double fft = sys.n_fft / 2 * std::log2(sys.n_fft);
  const double kd = k;
  OpLoad load;
  load.ofdm = fft + kd * sys.n_sc;
  load.weights = fft + kd;
  if (uses_inverse(base.mode)) load.weights += kd * (kd + 1) / 2 + kd * kd;

  GridCell c;
  c.k = k;
  DimensioningPoint d;
  d.load = load;
  d.mode = base.mode;
  d.t_ofdm = base.t_ofdm;
  d.f_sample = sys.f_sample;
  d.t_link = base.t_link;
  d.t_inv = k > 0 ? cubic_t_inv(base.t_inv, base.K, k) : 0.0;
  d.n_ul1 = base.n_ul1;
  d.n_ul2 = base.n_ul2;
  d.n_dl = base.n_dl;
  d.n_hops = n_hops;

  if (model == LoadModel::Asymptotic) {
    c.nops_required = nops_asymptotic(d);
    c.limiter = Limiter::Asymptotic;
    return c;
  }
  const double avg = nops_avg(d);
  c.nops_required = avg;
  c.limiter = Limiter::Average;
  if (inv == InversionModel::CubicScaling) {
    const auto cp = critical_path_table(d);
    if (cp.unmeetable_symbol) {
      c.nops_required = cp.max;
      c.limiter = Limiter::Deadline;
    } else if (cp.max > avg) {
      c.nops_required = cp.max;
      c.limiter = Limiter::Critical;
    }
  }
  return c;
}

inline bool within_capacity(double required, double capacity) { return required <= capacity * (1 + 1e-12); }

inline FeasibilityGrid explore(const SystemParams& base, int n_hops, const GridSpec& spec) {
  if (spec.bandwidths_hz.empty() || spec.ks.empty() || spec.f_clks_hz.empty())
    throw std::invalid_argument("explore: every grid axis needs at least one point");
  FeasibilityGrid g;
  g.spec = spec;
  for (double bw : spec.bandwidths_hz) {
    const auto sys = scale_bandwidth(base, bw, spec.base_bandwidth_hz);
    for (int k : spec.ks) {
      const auto cell = evaluate_cell(base, n_hops, sys, k, spec.model, spec.inversion);
      for (double f : spec.f_clks_hz) {
        GridCell c = cell;
        c.bandwidth_hz = bw;
        c.f_clk_hz = f;
        c.capacity = spec.n_pe * f / sys.f_sample;
        c.feasible = within_capacity(c.nops_required, c.capacity);
        g.cells.push_back(c);
      }
    }
  }
  return g;
}

/// Cells whose feasibility contradicts monotonicity: a feasible cell must stay
/// feasible when K or the bandwidth decreases at the same clock.
inline std::vector<std::string> monotonicity_violations(const FeasibilityGrid& g) {
  std::vector<std::string> out;
  const auto& s = g.spec;
  for (std::size_t b = 0; b < s.bandwidths_hz.size(); ++b)
    for (std::size_t k = 0; k < s.ks.size(); ++k)
      for (std::size_t f = 0; f < s.f_clks_hz.size(); ++f) {
        const auto& c = g.at(b, k, f);
        if (!c.feasible) continue;
        for (std::size_t b2 = 0; b2 < s.bandwidths_hz.size(); ++b2)
          for (std::size_t k2 = 0; k2 < s.ks.size(); ++k2) {
            if (s.bandwidths_hz[b2] > s.bandwidths_hz[b] || s.ks[k2] > s.ks[k]) continue;
            if (!g.at(b2, k2, f).feasible)
              out.push_back("feasible at B=" + std::to_string(c.bandwidth_hz) + " K=" + std::to_string(c.k) +
                            " but not at B=" + std::to_string(s.bandwidths_hz[b2]) + " K=" + std::to_string(s.ks[k2]));
          }
      }
  return out;
}

/// Largest K, searched upwards from 1 and stopping at the first infeasible
/// value, whose requirement fits N_PE f_clk / f_sample. 0 if even K = 1 does
/// not fit. ZF and MMSE stop at K = M.
inline int max_terminals(const SystemParams& base, int n_hops, double f_clk, int n_pe, double bandwidth_hz,
                         double base_bandwidth_hz = 20e6, LoadModel model = LoadModel::Framed,
                         InversionModel inv = InversionModel::CubicScaling, int k_limit = 4096) {
  const auto sys = scale_bandwidth(base, bandwidth_hz, base_bandwidth_hz);
  const double capacity = n_pe * f_clk / sys.f_sample;
  if (uses_inverse(base.mode)) k_limit = std::min(k_limit, base.M);
  int best = 0;
  for (int k = 1; k <= k_limit; ++k) {
    if (!within_capacity(evaluate_cell(base, n_hops, sys, k, model, inv).nops_required, capacity)) break;
    best = k;
  }
  return best;
}

}  // namespace dmimo
