#pragma once

// Deterministic per-node task schedule for one or more frames.
//
// Per frame the critical chain is placed first: pilot FFT, CE and B_i bottom-up,
// the CCU inversion, the inverse broadcast, then W_i, the N_UL,PB uplink symbols
// processed ahead of the downlink burst and every downlink symbol. The remaining
// uplink symbols are then placed first-in first-out into idle gaps that they fit
// completely, or after the last placed task. A critical task never moves to make
// room for background work.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dmimo/dimensioning.hpp"
#include "dmimo/params.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

enum class Task { FFT, CE, Gram, WaitInv, Weights, UlDecode, DlPrecode, IFFT };

inline std::string_view task_name(Task t) {
  switch (t) {
    case Task::FFT: return "FFT";
    case Task::CE: return "CE";
    case Task::Gram: return "B_i";
    case Task::WaitInv: return "WAIT_INV";
    case Task::Weights: return "W_i";
    case Task::UlDecode: return "UL_decode";
    case Task::DlPrecode: return "DL_precode";
    case Task::IFFT: return "IFFT";
  }
  return "?";
}

/// Value: a parent may start accumulating once the first value of each child
/// has arrived (pipelined streaming). Task: it waits for the child's last value.
enum class Granularity { Value, Task };

/// Symbol numbering: 0 for frame-level tasks (pilot FFT, CE, B_i, W_i, WAIT_INV),
/// 1..N_UL for uplink tasks and 1..N_DL for downlink tasks.
struct ScheduleEntry {
  Task task = Task::FFT;
  int frame = 0;
  int symbol = 0;
  double start = 0;
  double duration = 0;
  std::uint64_t ops = 0;
  bool background = false;

  double end() const { return start + duration; }
  bool is_idle() const { return task == Task::WaitInv; }
};

/// Execution time of `ops` PE operations at `rate` operations per second.
inline double task_duration(std::uint64_t ops, double rate) { return static_cast<double>(ops) / rate; }

// A producer streams its values to the next hop while it computes them: the
// first value arrives T_link after the task starts, the last one a task
// duration later. Written this way, a consumer of equal duration that starts
// no earlier than the first arrival also ends no earlier than the last one,
// exactly, in floating point.
inline double stream_first(double start, double t_link) { return start + t_link; }
inline double stream_last(double start, double duration, double t_link) { return (start + t_link) + duration; }

struct NodeSchedule {
  int node = 0;
  int depth = 0;
  double skew = 0;
  std::vector<ScheduleEntry> entries;  // sorted by start, non-overlapping
};

struct CcuEntry {
  int frame = 0;
  double gram_arrival = 0;  // last Gram value received from the root
  double inv_done = 0;
};

struct ScheduleSettings {
  int n_hat = 1;
  int n_ul_pb = 0;
  int frames = 1;
  Granularity granularity = Granularity::Value;
};

/// Schedule of the worst-placed node, with the round trip to the CCU lumped
/// into 2 N_hops T_link.
struct Schedule {
  SystemParams params;
  ScheduleSettings settings;
  int n_hops = 1;
  double rate = 0;  // operations per second
  NodeSchedule node;
};

struct SystemSchedule {
  SystemParams params;
  ScheduleSettings settings;
  TreeTopology tree = build_tree(1, 2);
  double rate = 0;
  std::vector<NodeSchedule> nodes;  // indexed by node id
  std::vector<CcuEntry> ccu;        // one per frame when an inverse is used
};

namespace detail {

class Timeline {
 public:
  explicit Timeline(std::vector<ScheduleEntry>& e) : e_(e) {}

  double avail() const { return e_.empty() ? -std::numeric_limits<double>::infinity() : e_.back().end(); }

  /// Appends after the last entry.
  const ScheduleEntry& append(ScheduleEntry x, double earliest) {
    x.start = e_.empty() ? earliest : std::max(e_.back().end(), earliest);
    e_.push_back(x);
    return e_.back();
  }

  /// First idle gap, at or after `earliest`, that holds the whole task.
  const ScheduleEntry& fill(ScheduleEntry x, double earliest) {
    for (std::size_t i = 0; i < e_.size(); ++i) {
      const double s = i == 0 ? earliest : std::max(e_[i - 1].end(), earliest);
      if (s + x.duration <= e_[i].start) {
        x.start = s;
        return *e_.insert(e_.begin() + static_cast<std::ptrdiff_t>(i), x);
      }
    }
    return append(x, earliest);
  }

  void insert_sorted(ScheduleEntry x) {
    auto it = std::upper_bound(e_.begin(), e_.end(), x.start,
                               [](double t, const ScheduleEntry& y) { return t < y.start; });
    e_.insert(it, x);
  }

 private:
  std::vector<ScheduleEntry>& e_;
};

struct NodeFrameState {
  double b_end = 0;
  double b_first = 0, b_last = 0;  // arrival of the partial Gram at the parent
  double d_arrival = 0;            // inverse
  double q_arrival = 0;
  double w_start = 0;
  double w_end = 0;                // local weights usable from here on
  std::vector<double> dec_first, dec_last, dec_end;  // per uplink symbol, 1-based
};

// Shared placement for the tree schedule and the lumped single-node schedule.
// With `lumped_hops` set the tree must be a single node.
inline void place_frames(const SystemParams& p, const TreeTopology& tree, const ScheduleSettings& s, double rate,
                         std::optional<int> lumped_hops, std::vector<NodeSchedule>& nodes,
                         std::vector<CcuEntry>& ccu) {
  const FrameLayout layout(p);
  const OpCounts ops = op_counts(p);
  const bool inverse = uses_inverse(p.mode);
  const bool by_value = s.granularity == Granularity::Value;
  const int m = tree.size();
  const int n_ul = p.n_ul();
  const auto up = tree.bottom_up_order();
  const auto down = tree.top_down_order();

  auto entry = [&](Task t, int frame, int symbol, std::int64_t n, bool bg = false) {
    ScheduleEntry e;
    e.task = t;
    e.frame = frame;
    e.symbol = symbol;
    e.ops = static_cast<std::uint64_t>(n);
    e.duration = task_duration(e.ops, rate);
    e.background = bg;
    return e;
  };

  // Earliest decode start of uplink symbol u at node n given its children.
  auto decode_ready = [&](const std::vector<NodeFrameState>& st, int n, int u, double fft_end) {
    double t = fft_end;
    for (int c : tree.children(n)) t = std::max(t, by_value ? st[c].dec_first[u] : st[c].dec_last[u]);
    return t;
  };

  auto place_uplink = [&](Timeline& tl, std::vector<NodeFrameState>& st, int n, int frame, int u, bool bg) {
    const double arrival = layout.uplink_arrival(frame, u);
    const ScheduleEntry* f;
    if (bg) {
      double earliest = arrival;
      if (u > s.n_ul_pb + 1) earliest = std::max(earliest, st[n].dec_end[u - 1]);
      f = &tl.fill(entry(Task::FFT, frame, u, ops.fft, true), earliest);
    } else {
      f = &tl.append(entry(Task::FFT, frame, u, ops.fft), arrival);
    }
    const double ready = std::max(decode_ready(st, n, u, f->end()), st[n].w_end);
    const auto& d = bg ? tl.fill(entry(Task::UlDecode, frame, u, ops.decode, true), ready)
                       : tl.append(entry(Task::UlDecode, frame, u, ops.decode), ready);
    st[n].dec_first[u] = stream_first(d.start, p.t_link);
    st[n].dec_last[u] = stream_last(d.start, d.duration, p.t_link);
    st[n].dec_end[u] = d.end();
  };

  for (int frame = 0; frame < s.frames; ++frame) {
    std::vector<NodeFrameState> st(m);
    for (auto& x : st) {
      x.dec_first.assign(n_ul + 1, 0.0);
      x.dec_last.assign(n_ul + 1, 0.0);
      x.dec_end.assign(n_ul + 1, 0.0);
    }

    // Pilot processing, bottom-up.
    for (int n : up) {
      Timeline tl(nodes[n].entries);
      const auto& fft = tl.append(entry(Task::FFT, frame, 0, ops.fft), layout.pilot_end(frame));
      const auto& ce = tl.append(entry(Task::CE, frame, 0, ops.ce), fft.end());
      st[n].b_end = ce.end();
      st[n].w_end = ce.end();
      if (inverse) {
        double ready = ce.end();
        for (int c : tree.children(n)) ready = std::max(ready, by_value ? st[c].b_first : st[c].b_last);
        const auto& b = tl.append(entry(Task::Gram, frame, 0, ops.gram), ready);
        st[n].b_end = b.end();
        st[n].b_first = stream_first(b.start, p.t_link);
        st[n].b_last = stream_last(b.start, b.duration, p.t_link);
      }
    }

    // Inversion and broadcast of D; q leaves the CCU at the frame start.
    const double frame_start = layout.frame_start(frame);
    if (lumped_hops) {
      const int h = *lumped_hops;
      auto& x = st[tree.root()];
      x.d_arrival = x.b_end + p.t_inv + 2.0 * h * p.t_link;
      x.q_arrival = frame_start + h * p.t_link;
      if (inverse) ccu.push_back({frame, x.b_end + h * p.t_link, x.b_end + h * p.t_link + p.t_inv});
    } else {
      double inv_done = 0;
      if (inverse) {
        const double arrival = st[tree.root()].b_last;
        inv_done = arrival + p.t_inv;
        ccu.push_back({frame, arrival, inv_done});
      }
      for (int n : down) {
        const int par = tree.parent(n);
        st[n].d_arrival = (par == TreeTopology::kCcu ? inv_done : st[par].d_arrival) + p.t_link;
        st[n].q_arrival = (par == TreeTopology::kCcu ? frame_start : st[par].q_arrival) + p.t_link;
      }
    }

    // Weights, uplink symbols ahead of the downlink burst, downlink.
    for (int n : up) {
      Timeline tl(nodes[n].entries);
      if (inverse) {
        const auto& w = tl.append(entry(Task::Weights, frame, 0, ops.weights_product), st[n].d_arrival);
        st[n].w_start = w.start;
        st[n].w_end = w.end();
      }
      for (int u = 1; u <= std::min(s.n_ul_pb, n_ul); ++u) place_uplink(tl, st, n, frame, u, false);
      for (int i = 1; i <= p.n_dl; ++i) {
        const auto& pre = tl.append(entry(Task::DlPrecode, frame, i, ops.precode), st[n].q_arrival);
        tl.append(entry(Task::IFFT, frame, i, ops.fft), pre.end());
      }
    }

    // Buffered uplink symbols.
    for (int n : up) {
      Timeline tl(nodes[n].entries);
      for (int u = s.n_ul_pb + 1; u <= n_ul; ++u) place_uplink(tl, st, n, frame, u, true);
    }

    // Idle time spent waiting for the inverse.
    if (inverse) {
      for (int n = 0; n < m; ++n) {
        std::vector<ScheduleEntry> waits;
        double cursor = st[n].b_end;
        for (const auto& e : nodes[n].entries) {
          if (e.end() <= cursor || e.start >= st[n].w_start) continue;
          if (e.start > cursor) {
            ScheduleEntry w = entry(Task::WaitInv, frame, 0, 0);
            w.start = cursor;
            w.duration = e.start - cursor;
            waits.push_back(w);
          }
          cursor = std::max(cursor, e.end());
        }
        if (st[n].w_start > cursor) {
          ScheduleEntry w = entry(Task::WaitInv, frame, 0, 0);
          w.start = cursor;
          w.duration = st[n].w_start - cursor;
          waits.push_back(w);
        }
        Timeline tl(nodes[n].entries);
        for (auto& w : waits) tl.insert_sorted(w);
      }
    }
  }
}

// Offset of each node's first accumulation task in frame 0 relative to the earliest one.
inline void assign_skew(std::vector<NodeSchedule>& nodes) {
  std::vector<std::optional<double>> first(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n)
    for (const auto& e : nodes[n].entries)
      if (e.frame == 0 && (e.task == Task::Gram || e.task == Task::UlDecode)) {
        if (!first[n] || e.start < *first[n]) first[n] = e.start;
        if (e.task == Task::Gram) break;
      }
  double lo = std::numeric_limits<double>::infinity();
  for (auto& f : first)
    if (f) lo = std::min(lo, *f);
  for (std::size_t n = 0; n < nodes.size(); ++n) nodes[n].skew = first[n] ? *first[n] - lo : 0.0;
}

}  // namespace detail

inline void check_settings(const SystemParams& p, const ScheduleSettings& s) {
  if (s.n_hat < 1) throw std::invalid_argument("N_hat must be >= 1");
  if (s.frames < 1) throw std::invalid_argument("at least one frame must be scheduled");
  if (s.n_ul_pb < 0 || s.n_ul_pb > p.n_ul()) throw std::invalid_argument("N_UL,PB out of range");
  if (!(p.f_sample > 0) || !(p.t_ofdm > 0)) throw std::invalid_argument("f_sample and T_OFDM must be positive");
}

/// Single-node schedule at N_hat operations per sample with lumped hop latency.
inline Schedule build_node_schedule(const SystemParams& p, const ScheduleSettings& s, int n_hops) {
  check_settings(p, s);
  Schedule out;
  out.params = p;
  out.settings = s;
  out.n_hops = n_hops;
  out.rate = s.n_hat * p.f_sample;
  std::vector<NodeSchedule> nodes(1);
  std::vector<CcuEntry> ccu;
  detail::place_frames(p, build_tree(1, 1), s, out.rate, n_hops, nodes, ccu);
  out.node = std::move(nodes[0]);
  out.node.depth = n_hops - 1;
  return out;
}

/// Expands a node schedule over `tree`: every accumulation waits for its
/// children's values and every broadcast consumer for the values coming down.
inline SystemSchedule skew_schedules(const Schedule& base, const TreeTopology& tree, double t_link,
                                     Granularity g = Granularity::Value) {
  SystemSchedule out;
  out.params = base.params;
  out.params.t_link = t_link;
  out.settings = base.settings;
  out.settings.granularity = g;
  out.tree = tree;
  out.rate = base.rate;
  out.nodes.resize(tree.size());
  for (int n = 0; n < tree.size(); ++n) {
    out.nodes[n].node = n;
    out.nodes[n].depth = tree.depth(n);
  }
  detail::place_frames(out.params, tree, out.settings, out.rate, std::nullopt, out.nodes, out.ccu);
  detail::assign_skew(out.nodes);
  return out;
}

inline SystemSchedule build_system_schedule(const SystemParams& p, const TreeTopology& tree, const ScheduleSettings& s) {
  return skew_schedules(build_node_schedule(p, s, tree.n_hops()), tree, p.t_link, s.granularity);
}

// ---------------------------------------------------------------------------
// Verdicts and derived figures

struct DeadlineVerdict {
  int frame = 0;
  int symbol = 0;
  int node = 0;          // node finishing last
  double completion = 0;
  double deadline = 0;
  double slack = 0;
  bool met = true;
};

namespace detail {

inline bool meets(double completion, double deadline) {
  return completion <= deadline + 1e-12 * std::abs(deadline);
}

inline void collect_deadlines(const SystemParams& p, const std::vector<NodeSchedule>& nodes, int frames,
                              std::vector<DeadlineVerdict>& out) {
  const FrameLayout layout(p);
  for (int f = 0; f < frames; ++f)
    for (int i = 1; i <= p.n_dl; ++i) {
      DeadlineVerdict v;
      v.frame = f;
      v.symbol = i;
      v.deadline = layout.downlink_deadline(f, i);
      v.completion = -std::numeric_limits<double>::infinity();
      for (const auto& ns : nodes)
        for (const auto& e : ns.entries)
          if (e.task == Task::IFFT && e.frame == f && e.symbol == i && e.end() > v.completion) {
            v.completion = e.end();
            v.node = ns.node;
          }
      v.slack = v.deadline - v.completion;
      v.met = meets(v.completion, v.deadline);
      out.push_back(v);
    }
}

}  // namespace detail

/// One verdict per frame and downlink symbol, using the latest-finishing node.
inline std::vector<DeadlineVerdict> check_deadlines(const SystemSchedule& s) {
  std::vector<DeadlineVerdict> out;
  detail::collect_deadlines(s.params, s.nodes, s.settings.frames, out);
  return out;
}

inline std::vector<DeadlineVerdict> check_deadlines(const Schedule& s) {
  std::vector<DeadlineVerdict> out;
  detail::collect_deadlines(s.params, {s.node}, s.settings.frames, out);
  return out;
}

class InfeasibleSchedule : public std::runtime_error {
 public:
  explicit InfeasibleSchedule(const DeadlineVerdict& v)
      : std::runtime_error("downlink symbol " + std::to_string(v.symbol) + " of frame " + std::to_string(v.frame) +
                           " misses its deadline by " + std::to_string(-v.slack * 1e6) + " us"),
        verdict_(v) {}
  const DeadlineVerdict& verdict() const { return verdict_; }

 private:
  DeadlineVerdict verdict_;
};

/// Throws for the first violated deadline.
inline void ensure_feasible(const std::vector<DeadlineVerdict>& verdicts) {
  for (const auto& v : verdicts)
    if (!v.met) throw InfeasibleSchedule(v);
}

inline bool feasible(const std::vector<DeadlineVerdict>& verdicts) {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.met; });
}

/// Busy time of one node within frame `frame` (by task ownership, not by wall clock).
inline double busy_time(const NodeSchedule& n, int frame) {
  double t = 0;
  for (const auto& e : n.entries)
    if (e.frame == frame && !e.is_idle()) t += e.duration;
  return t;
}

inline double utilization(const NodeSchedule& n, const SystemParams& p, int frame = 0) {
  return busy_time(n, frame) / p.t_frame();
}

struct BufferInterval {
  int frame = 0;
  int symbol = 0;
  double arrival = 0;
  double released = 0;  // FFT start
};

struct BufferProfile {
  std::vector<BufferInterval> intervals;  // only symbols that had to wait
  int peak = 0;

  int occupancy_at(double t) const {
    int n = 0;
    for (const auto& b : intervals)
      if (b.arrival <= t && t < b.released) ++n;
    return n;
  }
};

/// Received uplink symbols waiting in the input buffer for their FFT.
inline BufferProfile input_buffer(const NodeSchedule& n, const SystemParams& p) {
  const FrameLayout layout(p);
  BufferProfile bp;
  for (const auto& e : n.entries) {
    if (e.task != Task::FFT || e.symbol == 0) continue;
    const double arrival = layout.uplink_arrival(e.frame, e.symbol);
    if (e.start > arrival) bp.intervals.push_back({e.frame, e.symbol, arrival, e.start});
  }
  // Peak: sweep over arrivals, the only times occupancy increases.
  for (const auto& b : bp.intervals) bp.peak = std::max(bp.peak, bp.occupancy_at(b.arrival));
  return bp;
}

}  // namespace dmimo
