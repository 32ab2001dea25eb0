// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "dmimo/dmimo.hpp"

using namespace dmimo;

namespace {

struct Check {
  std::ostringstream detail;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    const bool pass = std::abs(got - want) <= tol;
    detail << ' ' << what << '=' << fmt(got, 9);
    if (!pass) {
      ok = false;
      detail << " (want " << fmt(want, 9) << " +/- " << fmt(tol, 3) << ")";
    }
  }
  void equal(std::int64_t got, std::int64_t want, const std::string& what) {
    detail << ' ' << what << '=' << got;
    if (got != want) {
      ok = false;
      detail << " (want " << want << ")";
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << " exception: " << e.what();
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0) {
    c.detail << " runtime=" << fmt(dt, 3) << "s";
    if (dt >= time_limit_s) {
      c.ok = false;
      c.detail << " (limit " << time_limit_s << "s)";
    }
  }
  if (!c.ok) ++failures;
  std::printf("%s %d %s:%s\n", c.ok ? "PASS" : "FAIL", id, name, c.detail.str().c_str());
  std::fflush(stdout);
}

constexpr int kLteHops = 8;

SystemParams small(int m, int k, Mode mode) {
  SystemParams p;
  p.K = k;
  p.M = m;
  p.n_fft = 64;
  p.n_sc = 48;
  p.n_ul1 = 1;
  p.n_ul2 = 2;
  p.n_dl = 2;
  p.f_sample = 1e6;
  p.t_ofdm = 80e-6;
  p.t_link = 0.1e-6;
  p.t_inv = 5e-6;
  p.mode = mode;
  p.mmse_reg = mode == Mode::MMSE ? 0.1 : 0.0;
  return p;
}

SimulationResult simulate(const Scenario& sc, int frames = 1) {
  ScheduleSettings s;
  s.n_hat = dimension(sc.params, sc.tree.n_hops()).clock.n_hat;
  s.frames = frames;
  return run_frames(sc, build_system_schedule(sc.params, sc.tree, s));
}

void lte_dimensioning(Check& c) {
  const auto r = dimension(lte_preset(), kLteHops);
  c.near(r.nops_avg, 9.95, 0.01, "avg");
  c.expect(r.critical.rows.size() == 2, "two critical rows");
  c.near(r.critical.rows.at(0).ratio, 9.23, 0.01, "cp1");
  c.near(r.critical.rows.at(1).ratio, 11.28, 0.01, "cp2");
  c.near(r.nops, 11.28, 0.01, "N_OPS");
  c.equal(r.clock.n_hat, 12, "N_hat");
  c.near(r.clock.f_clk / 1e6, 368.64, 1e-9, "f_clk_MHz");
}

void inversion_landmarks(Check& c) {
  const auto r = dimension(lte_preset(), kLteHops);
  c.expect(r.t_inv_a && r.t_inv_b, "thresholds defined");
  c.near(r.t_inv_a.value_or(0) * 1e6, 8.27, 0.05, "T_inv_A_us");
  c.near(r.t_inv_b.value_or(0) * 1e6, 110, 1, "T_inv_B_us");
  c.near(r.slack.max_t_inv * 1e6, 54.2, 0.1, "max_T_inv_us");
}

void memory_and_link(Check& c) {
  const auto r = dimension(lte_preset(), kLteHops);
  c.equal(r.memory.input_bits, 49152, "mem_in");
  c.equal(r.memory.processing_bits, 49152, "mem_proc");
  c.equal(r.memory.output_bits, 24576, "mem_out");
  c.equal(r.memory.total_bits(), 120 * 1024 + 960, "mem_total");
  // Rates are products of exact integers and 30.72e6; compare at the last digit.
  c.near(r.link.matched_rate_up, 8.84736e9, 1e-3, "R_up");
  c.near(r.link.matched_rate_down, 1.47456e9, 1e-3, "R_down");
  c.near(r.link.throughput_up, 384e6, 1e-6, "thr_up");
  c.near(r.link.throughput_down, 384e6, 1e-6, "thr_down");
}

void slack_variants(Check& c) {
  const auto lte = lte_preset();
  const auto r = dimension(lte, kLteHops);
  c.equal(r.slack.max_k, 21, "max_K");
  c.equal(r.slack.max_n_hops, 22, "max_hops");

  auto k30 = lte;
  k30.K = 30;
  k30.t_inv = cubic_t_inv(lte.t_inv, lte.K, 30);
  const double n30 = nops_required(make_point(k30, kLteHops));
  const auto one = select_pe_clock(n30, 1, lte.f_sample);
  const auto two = select_pe_clock(n30, 2, lte.f_sample);
  c.equal(one.n_hat, 28, "K30_N_hat");
  c.near(one.f_clk / 1e6, 860.16, 1e-6, "K30_1PE_MHz");
  c.equal(two.n_hat, 28, "K30_2PE_N_hat");
  c.near(two.f_clk / 1e6, 430.08, 1e-6, "K30_2PE_MHz");

  c.equal(dimension(lte, kLteHops, 1).clock.n_hat, 17, "PB1");
  auto split = lte;
  split.n_ul1 = 1;
  split.n_ul2 = 1;
  c.equal(dimension(split, kLteHops).clock.n_hat, 17, "UL1_UL2");

  auto half = lte;
  half.t_inv /= 2;
  c.equal(dimension(half, kLteHops, 1).clock.n_hat, 15, "PB1_half");
  auto split_half = split;
  split_half.t_inv /= 2;
  c.equal(dimension(split_half, kLteHops).clock.n_hat, 15, "UL1_UL2_half");
}

void oracle_equivalence(Check& c) {
  std::mt19937_64 g(20240501);
  const int ms[] = {1, 3, 7, 15, 255};
  const int ks[] = {1, 2, 4, 8, 20};
  double worst_inv = 0, worst_cb = 0, worst_symbols = 0;
  int scenarios = 0, noiseless_zf = 0;
  while (scenarios < 100) {
    const Mode mode = static_cast<Mode>(g() % 3);
    const int m = ms[g() % 5];
    const int k = ks[g() % 5];
    if (uses_inverse(mode) && k > m) continue;
    const bool noiseless = g() % 2 == 0;
    const auto p = small(m, k, mode);
    const auto sc = generate_scenario(g(), p, build_tree(m, 1 + static_cast<int>(g() % 3)), noiseless ? 0 : 0.01);
    const auto f = simulate(sc).frames.at(0);
    ++scenarios;
    if (!f.aborted.empty()) {
      c.expect(false, "aborted: " + f.aborted);
      continue;
    }
    // Independent dense reference from the received pilot tones (one per terminal).
    const auto d = frame_data(sc, 0);
    const oracle::Mat h_hat = oracle::to_eigen(d.pilot_rx).leftCols(k) / sc.pilot;
    const oracle::Mat a = oracle::decoding_matrix(h_hat, mode == Mode::CB, p.mmse_reg);
    double err = 0;
    for (int u = 0; u < p.n_ul(); ++u) {
      const oracle::Mat ref = (a * oracle::to_eigen(d.ul_rx[u])).transpose();
      err = std::max(err, oracle::rel_fro(oracle::to_eigen(f.y_tilde[u]), ref));
    }
    for (int i = 0; i < p.n_dl; ++i) {
      const oracle::Mat ref = a.transpose() * oracle::to_eigen(d.dl[i]).transpose();
      err = std::max(err, oracle::rel_fro(oracle::to_eigen(f.x[i]), ref));
    }
    if (mode == Mode::CB) {
      worst_cb = std::max(worst_cb, err / m);
      c.expect(err <= 1e-12 * m, "CB M=" + std::to_string(m) + " K=" + std::to_string(k) + " err=" + fmt(err, 3));
    } else {
      worst_inv = std::max(worst_inv, err);
      c.expect(err <= 1e-9, std::string(to_string(mode)) + " M=" + std::to_string(m) + " K=" + std::to_string(k) +
                                " err=" + fmt(err, 3));
    }
    if (mode == Mode::ZF && noiseless) {
      ++noiseless_zf;
      for (int u = 0; u < p.n_ul(); ++u) {
        const double e = oracle::rel_fro(oracle::to_eigen(f.y_tilde[u]), oracle::to_eigen(d.ul[u]));
        worst_symbols = std::max(worst_symbols, e);
        c.expect(e <= 1e-9, "noiseless ZF symbols M=" + std::to_string(m) + " K=" + std::to_string(k));
      }
    }
  }
  c.expect(noiseless_zf > 0, "at least one noiseless ZF scenario");
  c.detail << " scenarios=" << scenarios << " worst_zf_mmse=" << fmt(worst_inv, 3)
           << " worst_cb_per_M=" << fmt(worst_cb, 3) << " noiseless_zf=" << noiseless_zf
           << " worst_symbol_err=" << fmt(worst_symbols, 3);
}

void op_count_crosscheck(Check& c) {
  const auto p = lte_preset();
  const auto tree = build_tree(p.M, p.tree_arity);
  const auto r = dimension(p, tree.n_hops());
  ScheduleSettings s;
  s.n_hat = r.clock.n_hat;
  const auto sched = build_system_schedule(p, tree, s);
  const auto res = run_frames(generate_scenario(7, p, tree), sched);
  const auto analytic = op_counts(p).per_frame(p);
  c.equal(analytic, 152950, "analytic");
  bool all = true;
  for (const auto& t : res.frames.at(0).ops) all = all && static_cast<std::int64_t>(t.total()) == analytic;
  c.expect(all && res.frames[0].ops.size() == 255, "every node tallies the analytic count");
  double worst = 0;
  for (const auto& n : sched.nodes)
    worst = std::max(worst, std::abs(utilization(n, p) - r.nops_avg / r.clock.n_hat));
  c.detail << " utilization=" << fmt(utilization(sched.nodes[0], p), 12);
  c.expect(worst <= 1e-9, "utilization equals avg / N_hat");
}

bool pairwise_monotone(const FeasibilityGrid& g) {
  for (const auto& a : g.cells)
    for (const auto& b : g.cells)
      if (a.feasible && a.f_clk_hz == b.f_clk_hz && b.bandwidth_hz <= a.bandwidth_hz && b.k <= a.k && !b.feasible)
        return false;
  return true;
}

void consistency(Check& c) {
  // Topology invariance of the processed signals.
  {
    const auto p = small(20, 4, Mode::ZF);
    const auto base = generate_scenario(11, p, build_tree(20, 2));
    const auto ref = simulate(base).frames.at(0);
    double worst = 0;
    for (int arity : {1, 3, 5}) {
      auto sc = base;
      sc.tree = build_tree(20, arity);
      const auto f = simulate(sc).frames.at(0);
      for (int u = 0; u < p.n_ul(); ++u)
        worst = std::max(worst, oracle::rel_fro(oracle::to_eigen(f.y_tilde[u]), oracle::to_eigen(ref.y_tilde[u])));
      for (int i = 0; i < p.n_dl; ++i)
        worst = std::max(worst, oracle::rel_fro(oracle::to_eigen(f.x[i]), oracle::to_eigen(ref.x[i])));
    }
    c.detail << " topology_err=" << fmt(worst, 3);
    c.expect(worst <= 1e-12, "topology invariance");
  }
  // Threshold identities.
  {
    auto d = make_point(lte_preset(), kLteHops);
    const auto a = t_inv_a(d);
    const auto b = t_inv_b(d);
    c.expect(a && b, "thresholds defined");
    if (a && b) {
      d.t_inv = *a;
      const double gap_a = std::abs(critical_path_table(d).max - nops_avg(d));
      d.t_inv = *b;
      const auto rows = critical_path_table(d).rows;
      double spread = 0;
      for (const auto& r : rows) spread = std::max(spread, std::abs(r.ratio - rows.front().ratio));
      c.detail << " gap_at_A=" << fmt(gap_a, 3) << " spread_at_B=" << fmt(spread, 3);
      c.expect(gap_a <= 1e-9, "critical equals avg at T_inv,A");
      c.expect(spread <= 1e-9, "equal ratios at T_inv,B");
    }
  }
  // Randomized feasibility sweep: 10 bandwidths x 10 K values per clock.
  {
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> bw(5e6, 60e6);
    GridSpec spec;
    for (int i = 0; i < 10; ++i) spec.bandwidths_hz.push_back(bw(g));
    for (int i = 0; i < 10; ++i) spec.ks.push_back(1 + static_cast<int>(g() % 40));
    spec.f_clks_hz = {368.64e6, 614.4e6, 1e9};
    const auto lte = lte_preset();
    const auto grid = explore(lte, kLteHops, spec);
    c.expect(pairwise_monotone(grid), "feasibility monotone over random sweep");
    c.expect(monotonicity_violations(grid).empty(), "grid self-check");
  }
  // FFT round trip and Parseval at 2048.
  {
    std::mt19937_64 g(9);
    const auto x = oracle::random_vector(g, 2048);
    const auto fx = fft_dit(x, false);
    const auto back = fft_dit(fx, true);
    double rt = 0, ex = 0, ef = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rt = std::max(rt, std::abs(back[i] - x[i]));
      ex += std::norm(x[i]);
      ef += std::norm(fx[i]);
    }
    const double parseval = std::abs(ef - 2048 * ex) / (2048 * ex);
    c.detail << " fft_roundtrip=" << fmt(rt, 3) << " parseval=" << fmt(parseval, 3);
    c.expect(rt <= 1e-10, "FFT round trip");
    c.expect(parseval <= 1e-9, "Parseval");
  }
}

void dse_shape(Check& c) {
  const auto lte = lte_preset();
  const double f_clk = dimension(lte, kLteHops).clock.f_clk;
  const double bws[] = {10e6, 20e6, 40e6};
  std::vector<int> k;
  for (double b : bws) k.push_back(max_terminals(lte, kLteHops, f_clk, lte.n_pe, b));
  c.detail << " f_clk_MHz=" << fmt(f_clk / 1e6, 10) << " max_K(10,20,40 MHz)=" << k[0] << ',' << k[1] << ','
           << k[2];
  for (std::size_t i = 0; i + 1 < k.size(); ++i)
    c.expect(std::abs(2 * k[i + 1] - k[i]) <= 2,
             "K(" + fmt(bws[i + 1] / 1e6) + " MHz) within 1 of K(" + fmt(bws[i] / 1e6) + " MHz)/2");
}

}  // namespace

int main() {
  criterion(1, "LTE dimensioning", 1.0, lte_dimensioning);
  criterion(2, "inversion-time landmarks", 0, inversion_landmarks);
  criterion(3, "memory and link figures", 0, memory_and_link);
  criterion(4, "slack variants", 0, slack_variants);
  criterion(5, "distributed vs centralized equivalence", 60.0, oracle_equivalence);
  criterion(6, "op-count cross-check", 0, op_count_crosscheck);
  criterion(7, "consistency properties", 0, consistency);
  criterion(8, "DSE bandwidth trade-off", 10.0, dse_shape);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
