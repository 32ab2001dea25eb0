#pragma once

// Command-line front end: dimension, schedule, simulate, explore.
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration error.
//
// --tinv sets the inversion time of the run. For schedule and simulate the
// clock is still chosen for the configured T_inv_s, so a slower inversion shows
// up as missed deadlines rather than as a faster clock.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dmimo/dimensioning.hpp"
#include "dmimo/dse.hpp"
#include "dmimo/params.hpp"
#include "dmimo/report.hpp"
#include "dmimo/scheduler.hpp"
#include "dmimo/simulator.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

namespace cli {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2 };

struct Options {
  std::string config;
  std::string preset;
  std::string mode;
  std::uint64_t seed = 0;
  int frames = 1;
  std::optional<double> tinv;
  std::string out_dir;
  std::string format = "text";
  // explore
  std::vector<double> bandwidths{10e6, 20e6, 40e6};
  std::vector<double> f_clks{368.64e6, 614.4e6, 1e9};
  int k_max = 64;
  std::string model = "framed";
};

struct Loaded {
  SystemParams nominal;   // as configured; used for dimensioning
  SystemParams run;       // with the --tinv override
  double noise_variance = 0;
  std::optional<int> n_ul_pb;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Loaded load(const Options& o) {
  Loaded l;
  if (o.preset.empty() && o.config.empty()) throw UsageError("one of --preset or --config is required");
  if (!o.preset.empty()) {
    if (o.preset != "lte") throw UsageError("unknown preset '" + o.preset + "' (known: lte)");
    l.nominal = lte_preset();
  }
  if (!o.config.empty()) {
    try {
      auto rest = apply_config(l.nominal, load_config_file(o.config));
      for (const auto& [k, v] : rest) {
        if (k == "noise_variance") l.noise_variance = detail::parse_double(k, v);
        else if (k == "N_UL_PB") l.n_ul_pb = detail::parse_int(k, v);
        else throw UsageError("unknown config key '" + k + "'");
      }
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (!o.mode.empty()) {
    try {
      l.nominal.mode = parse_mode(o.mode);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (auto v = validate(l.nominal); !v.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& x : v) msg += "\n  " + x.field + ": " + x.rule;
    throw UsageError(msg);
  }
  l.run = l.nominal;
  if (o.tinv) {
    if (*o.tinv < 0) throw UsageError("--tinv must be nonnegative");
    l.run.t_inv = *o.tinv;
  }
  return l;
}

/// Writes to DIR/name when --out is set, otherwise to `fallback` if given.
class Sink {
 public:
  Sink(const Options& o, std::ostream& out) : dir_(o.out_dir), out_(out) {
    if (!dir_.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dir_, ec);
      if (ec) throw UsageError("cannot create output directory '" + dir_ + "': " + ec.message());
    }
  }

  template <class F>
  void emit(const std::string& name, bool to_stdout, F&& write) {
    if (dir_.empty()) {
      if (to_stdout) write(out_);
      return;
    }
    const auto path = std::filesystem::path(dir_) / name;
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path.string() + "'");
    write(f);
    out_ << "wrote " << path.string() << '\n';
  }

 private:
  std::string dir_;
  std::ostream& out_;
};

inline int cmd_dimension(const Options& o, std::ostream& out, std::ostream& err) {
  auto l = load(o);
  const auto tree = build_tree(l.run.M, l.run.tree_arity);
  DimensioningReport r;
  try {
    r = dimension(l.run, tree.n_hops(), l.n_ul_pb);
  } catch (const UnmeetableDeadline& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  Sink sink(o, out);
  const bool csv = o.format == "csv";
  sink.emit("dimension.txt", !csv, [&](std::ostream& s) { write_dimension_text(s, r); });
  sink.emit("critical_path.csv", csv, [&](std::ostream& s) { write_critical_path_csv(s, r); });
  if (r.clock.n_hat < r.nops - 1e-9) {
    err << "error: selected N_hat below the requirement\n";
    return kCheckFailed;
  }
  return kOk;
}

struct Planned {
  DimensioningReport nominal;
  SystemSchedule schedule;
};

inline Planned plan(const Loaded& l, const TreeTopology& tree, int frames) {
  Planned p;
  p.nominal = dimension(l.nominal, tree.n_hops(), l.n_ul_pb);
  ScheduleSettings s;
  s.n_hat = p.nominal.clock.n_hat;
  s.n_ul_pb = p.nominal.n_ul_pb;
  s.frames = frames;
  p.schedule = build_system_schedule(l.run, tree, s);
  return p;
}

inline int report_deadlines(const std::vector<DeadlineVerdict>& v, std::ostream& err) {
  for (const auto& d : v)
    if (!d.met) {
      err << "error: " << InfeasibleSchedule(d).what() << '\n';
      return kCheckFailed;
    }
  return kOk;
}

inline int cmd_schedule(const Options& o, std::ostream& out, std::ostream& err) {
  auto l = load(o);
  const auto tree = build_tree(l.run.M, l.run.tree_arity);
  Planned p;
  try {
    p = plan(l, tree, o.frames);
  } catch (const UnmeetableDeadline& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  const auto verdicts = check_deadlines(p.schedule);
  Sink sink(o, out);
  const bool csv = o.format == "csv";
  sink.emit("schedule.csv", csv, [&](std::ostream& s) { write_schedule_csv(s, p.schedule.nodes); });
  sink.emit("deadlines.csv", false, [&](std::ostream& s) { write_deadlines_csv(s, verdicts); });
  sink.emit("deadlines.txt", !csv, [&](std::ostream& s) {
    s << "N_hat_OPS: " << p.schedule.settings.n_hat << '\n';
    s << "N_UL,PB: " << p.schedule.settings.n_ul_pb << '\n';
    s << "T_inv_us: " << fmt(l.run.t_inv * 1e6) << '\n';
    write_deadlines_text(s, verdicts);
    if (!verdicts.empty()) {
      auto worst = std::min_element(verdicts.begin(), verdicts.end(),
                                    [](const auto& a, const auto& b) { return a.slack < b.slack; });
      s << "min_slack_symbol: " << worst->symbol << '\n';
    }
    s << "utilization: " << fmt(utilization(p.schedule.nodes[0], l.run)) << '\n';
  });
  return report_deadlines(verdicts, err);
}

inline int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  auto l = load(o);
  const auto tree = build_tree(l.run.M, l.run.tree_arity);
  Planned p;
  try {
    p = plan(l, tree, o.frames);
  } catch (const UnmeetableDeadline& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  Scenario sc;
  try {
    sc = generate_scenario(o.seed, l.run, tree, l.noise_variance);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto res = run_frames(sc, p.schedule);
  const double tol = uses_inverse(l.run.mode) ? 1e-9 : 1e-12 * l.run.M;
  const auto per_frame = static_cast<std::uint64_t>(op_counts(l.run).per_frame(l.run));

  std::vector<std::string> failures;
  std::vector<DeadlineVerdict> verdicts;
  for (const auto& f : res.frames) {
    verdicts.insert(verdicts.end(), f.deadlines.begin(), f.deadlines.end());
    if (!f.aborted.empty()) failures.push_back("frame " + std::to_string(f.frame) + ": " + f.aborted);
    if (f.worst_ul_error() > tol || f.worst_dl_error() > tol)
      failures.push_back("frame " + std::to_string(f.frame) + ": oracle mismatch beyond " + fmt(tol));
    for (std::size_t n = 0; n < f.ops.size(); ++n)
      if (f.ops[n].total() != per_frame) {
        failures.push_back("frame " + std::to_string(f.frame) + ": node " + std::to_string(n) +
                           " op tally differs from the analytic count");
        break;
      }
  }
  if (res.timing_mismatches) failures.push_back(std::to_string(res.timing_mismatches) + " timing mismatches");
  if (res.causality_violations) failures.push_back(std::to_string(res.causality_violations) + " causality violations");

  Sink sink(o, out);
  const bool csv = o.format == "csv";
  sink.emit("summary.txt", !csv, [&](std::ostream& s) {
    s << "seed: " << o.seed << '\n';
    s << "frames: " << res.frames.size() << '\n';
    s << "N_hat_OPS: " << p.schedule.settings.n_hat << '\n';
    s << "T_inv_us: " << fmt(l.run.t_inv * 1e6) << '\n';
    for (const auto& f : res.frames) {
      s << "frame " << f.frame << " ul_rel_error: " << fmt(f.worst_ul_error(), 3) << '\n';
      s << "frame " << f.frame << " dl_rel_error: " << fmt(f.worst_dl_error(), 3) << '\n';
      s << "frame " << f.frame << " ops_per_node: " << (f.ops.empty() ? 0 : f.ops[0].total()) << '\n';
      if (!f.aborted.empty()) s << "frame " << f.frame << " aborted: " << f.aborted << '\n';
    }
    s << "analytic_ops_per_node: " << per_frame << '\n';
    s << "timing_mismatches: " << res.timing_mismatches << '\n';
    s << "causality_violations: " << res.causality_violations << '\n';
    write_deadlines_text(s, verdicts);
  });
  sink.emit("ops.csv", csv, [&](std::ostream& s) { write_op_tally_csv(s, res); });
  sink.emit("events.csv", false, [&](std::ostream& s) { write_event_log_csv(s, res.log); });
  sink.emit("deadlines.csv", false, [&](std::ostream& s) { write_deadlines_csv(s, verdicts); });

  int code = kOk;
  for (const auto& f : failures) {
    err << "error: " << f << '\n';
    code = kCheckFailed;
  }
  if (report_deadlines(verdicts, err) != kOk) code = kCheckFailed;
  return code;
}

inline int cmd_explore(const Options& o, std::ostream& out, std::ostream& err) {
  auto l = load(o);
  const auto tree = build_tree(l.run.M, l.run.tree_arity);
  GridSpec spec;
  spec.bandwidths_hz = o.bandwidths;
  spec.f_clks_hz = o.f_clks;
  spec.n_pe = l.run.n_pe;
  try {
    spec.model = parse_load_model(o.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.k_max < 0) throw UsageError("--kmax must be nonnegative");
  for (int k = 0; k <= o.k_max; ++k) spec.ks.push_back(k);
  const auto grid = explore(l.run, tree.n_hops(), spec);
  const auto bad = monotonicity_violations(grid);

  Sink sink(o, out);
  const bool csv = o.format == "csv";
  sink.emit("grid.csv", csv, [&](std::ostream& s) { write_grid_csv(s, grid); });
  sink.emit("explore.txt", !csv, [&](std::ostream& s) {
    s << "model: " << to_string(spec.model) << '\n';
    for (double f : spec.f_clks_hz)
      for (double b : spec.bandwidths_hz)
        s << "f_clk_MHz " << fmt(f / 1e6, 10) << " bandwidth_MHz " << fmt(b / 1e6, 10) << " max_K "
          << max_terminals(l.run, tree.n_hops(), f, spec.n_pe, b, spec.base_bandwidth_hz, spec.model) << '\n';
    s << "monotonicity: " << (bad.empty() ? "ok" : "violated") << '\n';
  });
  for (const auto& b : bad) err << "error: " << b << '\n';
  return bad.empty() ? kOk : kCheckFailed;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed massive MIMO baseband: dimensioning, scheduling, simulation"};
  app.name("dmimo");
  cli::Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key=value configuration file");
    sub->add_option("--preset", o.preset, "built-in parameter set (lte)");
    sub->add_option("--mode", o.mode, "cb, zf or mmse");
    sub->add_option("--tinv", o.tinv, "inversion time in seconds");
    sub->add_option("--out", o.out_dir, "write result files into this directory");
    sub->add_option("--format", o.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  };
  auto* dim = app.add_subcommand("dimension", "operations, clock, memory and link report");
  auto* sch = app.add_subcommand("schedule", "per-node schedule and deadline verdicts");
  auto* sim = app.add_subcommand("simulate", "event-driven execution checked against the centralized reference");
  auto* exp = app.add_subcommand("explore", "feasibility over bandwidth, K and clock");
  for (auto* s : {dim, sch, sim, exp}) add_common(s);
  for (auto* s : {sch, sim}) s->add_option("--frames", o.frames, "frames to run")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "scenario seed");
  exp->add_option("--bandwidths", o.bandwidths, "bandwidths in Hz")->delimiter(',');
  exp->add_option("--fclk", o.f_clks, "clock frequencies in Hz")->delimiter(',');
  exp->add_option("--kmax", o.k_max, "largest K on the grid");
  exp->add_option("--model", o.model, "framed or asymptotic")->check(CLI::IsMember({"framed", "asymptotic"}));
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (dim->parsed()) return cli::cmd_dimension(o, out, err);
    if (sch->parsed()) return cli::cmd_schedule(o, out, err);
    if (sim->parsed()) return cli::cmd_simulate(o, out, err);
    if (exp->parsed()) return cli::cmd_explore(o, out, err);
  } catch (const cli::UsageError& e) {
    err << "error: " << e.what() << '\n';
    return cli::kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return cli::kUsage;
  }
  return cli::kUsage;
}

}  // namespace dmimo
