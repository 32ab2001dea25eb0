#pragma once

// Discrete-event execution of a SystemSchedule over the node tree.
//
// Every node runs the tasks of its schedule in order. A task starts when the
// node is idle and its inputs have arrived; start times are derived from the
// arrival times with the same arithmetic the scheduler uses, so an unperturbed
// run reproduces the schedule exactly. Kernels are evaluated when a task
// finishes and their outputs travel as messages over latency-annotated links.
//
// Radio model: each antenna observes, per used subcarrier, the channel-weighted
// sum of the terminal symbols plus noise. The observation is mapped to FFT bins
// and brought to the time domain by an uncounted IFFT; the node's own FFT is
// counted. The pilot places terminal k on subcarrier k with amplitude p.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dmimo/baseband.hpp"
#include "dmimo/fft.hpp"
#include "dmimo/scheduler.hpp"

namespace dmimo {

struct Scenario {
  std::uint64_t seed = 0;
  SystemParams params;
  TreeTopology tree = build_tree(1, 2);
  ComplexMatrix h;            // M x K, flat over subcarriers, fixed over frames
  double noise_variance = 0;
  double pilot = 1.0;
};

/// Transmitted symbols and received observations of one frame. Symbol blocks
/// are stored N_SC x K (row per subcarrier); observations M x N_SC.
struct FrameData {
  std::vector<ComplexMatrix> ul;
  std::vector<ComplexMatrix> dl;
  ComplexMatrix pilot_rx;
  std::vector<ComplexMatrix> ul_rx;
};

namespace detail {

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline cd complex_normal(std::mt19937_64& g, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2));
  const double re = n(g);
  const double im = n(g);
  return {re, im};
}

inline cd qpsk(std::mt19937_64& g) {
  const std::uint64_t b = g();
  const double a = 1.0 / std::numbers::sqrt2;
  return {(b & 1) ? a : -a, (b & 2) ? a : -a};
}

inline std::size_t bin_offset(const SystemParams& p) { return p.n_sc < p.n_fft ? 1 : 0; }

}  // namespace detail

inline Scenario generate_scenario(std::uint64_t seed, const SystemParams& p, const TreeTopology& tree,
                                  double noise_variance = 0.0) {
  if (auto v = validate(p); !v.empty()) throw std::invalid_argument("invalid parameters: " + v.front().rule);
  if (tree.size() != p.M) throw std::invalid_argument("tree size must equal M");
  if (p.K > p.n_sc) throw std::invalid_argument("pilot layout needs K <= N_SC");
  if (!is_power_of_two(static_cast<std::size_t>(p.n_fft))) throw std::invalid_argument("N_FFT must be a power of two");
  if (noise_variance < 0) throw std::invalid_argument("noise variance must be nonnegative");
  Scenario sc;
  sc.seed = seed;
  sc.params = p;
  sc.tree = tree;
  sc.noise_variance = noise_variance;
  sc.h = ComplexMatrix(p.M, p.K);
  auto g = detail::make_rng(seed, ~0ULL);
  for (auto& v : sc.h.data()) v = detail::complex_normal(g, 1.0);
  return sc;
}

/// Same scenario and frame index give bit-identical data.
inline FrameData frame_data(const Scenario& sc, int frame) {
  const auto& p = sc.params;
  auto g = detail::make_rng(sc.seed, static_cast<std::uint64_t>(frame));
  FrameData d;
  auto symbols = [&] {
    ComplexMatrix s(p.n_sc, p.K);
    for (auto& v : s.data()) v = detail::qpsk(g);
    return s;
  };
  for (int u = 0; u < p.n_ul(); ++u) d.ul.push_back(symbols());
  for (int i = 0; i < p.n_dl; ++i) d.dl.push_back(symbols());

  auto noise = [&] { return sc.noise_variance > 0 ? detail::complex_normal(g, sc.noise_variance) : cd{}; };
  d.pilot_rx = ComplexMatrix(p.M, p.n_sc);
  for (int m = 0; m < p.M; ++m)
    for (int s = 0; s < p.n_sc; ++s) d.pilot_rx(m, s) = (s < p.K ? sc.h(m, s) * sc.pilot : cd{}) + noise();
  for (int u = 0; u < p.n_ul(); ++u) {
    ComplexMatrix y(p.M, p.n_sc);
    for (int m = 0; m < p.M; ++m)
      for (int s = 0; s < p.n_sc; ++s) {
        cd acc = 0;
        for (int k = 0; k < p.K; ++k) acc += sc.h(m, k) * d.ul[u](s, k);
        y(m, s) = acc + noise();
      }
    d.ul_rx.push_back(std::move(y));
  }
  return d;
}

struct ErrorMetrics {
  double max_abs = 0;
  double rel_fro = 0;
};

inline ErrorMetrics error_metrics(const ComplexMatrix& got, const ComplexMatrix& ref) {
  if (got.rows() != ref.rows() || got.cols() != ref.cols()) throw std::invalid_argument("error_metrics: shape mismatch");
  ErrorMetrics e;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < got.data().size(); ++i) {
    const cd d = got.data()[i] - ref.data()[i];
    e.max_abs = std::max(e.max_abs, std::abs(d));
    num += std::norm(d);
    den += std::norm(ref.data()[i]);
  }
  e.rel_fro = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return e;
}

enum class Payload { Gram, YTilde, Inverse, Q };

inline std::string_view payload_name(Payload p) {
  switch (p) {
    case Payload::Gram: return "GRAM";
    case Payload::YTilde: return "YTILDE";
    case Payload::Inverse: return "INV";
    case Payload::Q: return "Q";
  }
  return "?";
}

struct LogEvent {
  double time = 0;
  int node = 0;  // M denotes the CCU
  std::string event;
  std::string payload;
  int frame = 0;
  int symbol = 0;
  std::string block;
};

struct TaskTally {
  std::array<std::uint64_t, 8> ops{};
  std::uint64_t& operator[](Task t) { return ops[static_cast<std::size_t>(t)]; }
  std::uint64_t operator[](Task t) const { return ops[static_cast<std::size_t>(t)]; }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : ops) s += v;
    return s;
  }
};

/// Scalar values a node puts on its upward link and receives from above.
struct LinkCount {
  std::uint64_t up = 0;
  std::uint64_t down = 0;
};

struct FrameResult {
  int frame = 0;
  std::vector<ComplexMatrix> y_tilde;     // per uplink symbol, N_SC x K at the CCU
  std::vector<ComplexMatrix> x;           // per downlink symbol, M x N_SC before the IFFT
  std::vector<ErrorMetrics> ul_error;     // against the centralized A y
  std::vector<ErrorMetrics> dl_error;     // against the centralized W q
  std::vector<ErrorMetrics> symbol_error; // y_tilde against the transmitted symbols
  std::vector<TaskTally> ops;             // per node
  std::vector<LinkCount> link;            // per node
  std::vector<DeadlineVerdict> deadlines;
  std::string aborted;                    // diagnostic when the frame could not be decoded

  double worst_ul_error() const {
    double e = 0;
    for (const auto& m : ul_error) e = std::max(e, m.rel_fro);
    return e;
  }
  double worst_dl_error() const {
    double e = 0;
    for (const auto& m : dl_error) e = std::max(e, m.rel_fro);
    return e;
  }
};

struct SimulationResult {
  std::vector<FrameResult> frames;
  std::vector<LogEvent> log;
  std::vector<NodeSchedule> executed;  // what actually ran, WAIT_INV omitted
  int timing_mismatches = 0;
  int causality_violations = 0;
};

namespace detail {

class Engine {
 public:
  Engine(const Scenario& sc, const SystemSchedule& s)
      : sc_(sc), s_(s), p_(s.params), layout_(s.params), m_(s.tree.size()) {
    if (sc.params.M != m_ || sc.params.K != p_.K || sc.params.n_sc != p_.n_sc || sc.params.n_fft != p_.n_fft ||
        sc.params.mode != p_.mode)
      throw std::invalid_argument("scenario and schedule disagree on system dimensions");
    nodes_.resize(m_);
    result_.executed.resize(m_);
    std::vector<int> bg(s.settings.frames, 0);
    remaining_.assign(s.settings.frames, 0);
    for (int n = 0; n < m_; ++n) {
      result_.executed[n].node = n;
      result_.executed[n].depth = s.tree.depth(n);
      result_.executed[n].skew = s.nodes[n].skew;
      for (const auto& e : s.nodes[n].entries) {
        if (e.is_idle()) continue;
        nodes_[n].tasks.push_back(e);
        ++remaining_[e.frame];
      }
    }
    for (int f = 0; f < s.settings.frames; ++f) {
      remaining_[f] += p_.n_ul();  // decoded symbols the CCU must receive
      FrameResult r;
      r.frame = f;
      r.y_tilde.assign(p_.n_ul(), ComplexMatrix(p_.n_sc, p_.K));
      r.x.assign(p_.n_dl, ComplexMatrix(p_.M, p_.n_sc));
      r.ops.assign(m_, {});
      r.link.assign(m_, {});
      result_.frames.push_back(std::move(r));
    }
  }

  SimulationResult run() {
    for (int f = 0; f < s_.settings.frames; ++f) {
      push({layout_.frame_start(f), Ev::FrameStart, m_, f, 0});
      push({layout_.pilot_end(f), Ev::Radio, -1, f, 0});
      for (int u = 1; u <= p_.n_ul(); ++u) push({layout_.uplink_arrival(f, u), Ev::Radio, -1, f, u});
    }
    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      dispatch(e);
    }
    for (int n = 0; n < m_; ++n)
      if (nodes_[n].next != nodes_[n].tasks.size())
        throw std::logic_error("node " + std::to_string(n) + " stalled at task " + std::to_string(nodes_[n].next));
    std::vector<DeadlineVerdict> v;
    collect_deadlines(p_, result_.executed, s_.settings.frames, v);
    for (const auto& d : v) result_.frames[d.frame].deadlines.push_back(d);
    return std::move(result_);
  }

 private:
  enum class Ev { FrameStart, Radio, Arrive, Finish, InvDone };

  struct Event {
    double time = 0;
    Ev kind = Ev::Radio;
    int node = 0;  // recipient; -1 for radio (all nodes), M for the CCU
    int frame = 0;
    int symbol = 0;
    Payload payload = Payload::Gram;
    int from = 0;
    bool last = true;
    int rank = 0;
    std::uint64_t seq = 0;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.time, a.rank, a.node, a.seq) > std::tie(b.time, b.rank, b.node, b.seq);
    }
  };

  struct Msg {
    double first = 0, last = 0;
    bool ready = false;  // payload attached
    bool valid = true;
    PackedHermitian gram;
    ComplexMatrix block;
    std::shared_ptr<const std::vector<ComplexMatrix>> q;
  };
  using Key = std::tuple<int, int, int, int>;  // payload, frame, symbol, sender

  struct Local {
    ComplexVector pilot_bins, h, w;
    bool weights_valid = true;
    std::map<int, ComplexVector> ul_bins;
  };

  struct Node {
    std::vector<ScheduleEntry> tasks;
    std::size_t next = 0;
    bool busy = false;
    double prev_end = -std::numeric_limits<double>::infinity();
    std::map<Key, Msg> inbox;
    std::map<int, Local> local;
  };

  static Key key(Payload p, int frame, int symbol, int from) { return {static_cast<int>(p), frame, symbol, from}; }

  // Ties: deeper nodes first so that a producer finishing at the same instant
  // as its consumer is handled before it; the CCU and radio come last/first.
  int rank_of(int node) const {
    if (node < 0) return -1000000;
    if (node >= m_) return 1;
    return -s_.tree.depth(node);
  }

  void push(Event e) {
    e.rank = rank_of(e.node);
    e.seq = seq_++;
    queue_.push(e);
  }

  void log(double t, int node, std::string ev, std::string payload, int frame, int symbol, std::string block = "-") {
    result_.log.push_back({t, node, std::move(ev), std::move(payload), frame, symbol, std::move(block)});
  }

  std::string all_subcarriers() const { return "0-" + std::to_string(p_.n_sc - 1); }

  int upstream(int n) const {
    const int par = s_.tree.parent(n);
    return par == TreeTopology::kCcu ? m_ : par;
  }

  const FrameData& data(int frame) {
    auto it = data_.find(frame);
    if (it == data_.end()) it = data_.emplace(frame, frame_data(sc_, frame)).first;
    return it->second;
  }

  // Announce a message to `to` and schedule its arrival events.
  Msg& send(int to, Payload pl, int frame, int symbol, int from, double first, double last) {
    Msg& msg = (to == m_ ? ccu_inbox_ : nodes_[to].inbox)[key(pl, frame, symbol, from)];
    msg.first = first;
    msg.last = last;
    if (first != last) push({first, Ev::Arrive, to, frame, symbol, pl, from, false});
    push({last, Ev::Arrive, to, frame, symbol, pl, from, true});
    return msg;
  }

  void forward_down(int n, Payload pl, int frame, const Msg& in) {
    for (int c : s_.tree.children(n)) {
      const double t = in.last + p_.t_link;
      Msg& out = send(c, pl, frame, 0, n, t, t);
      out.ready = true;
      out.valid = in.valid;
      out.gram = in.gram;
      out.q = in.q;
      log(now_, n, "send", std::string(payload_name(pl)), frame, 0,
          pl == Payload::Q ? all_subcarriers() : "-");
    }
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case Ev::FrameStart: on_frame_start(e.frame); break;
      case Ev::Radio:
        data(e.frame);
        for (int n = 0; n < m_; ++n) try_start(n);
        break;
      case Ev::Arrive: on_arrive(e); break;
      case Ev::Finish: on_finish(e.node); break;
      case Ev::InvDone: on_inv_done(e.frame); break;
    }
  }

  void on_frame_start(int frame) {
    const auto& d = data(frame);
    if (p_.n_dl == 0) return;
    auto q = std::make_shared<const std::vector<ComplexMatrix>>(d.dl);
    const double t = now_ + p_.t_link;
    Msg& msg = send(s_.tree.root(), Payload::Q, frame, 0, m_, t, t);
    msg.ready = true;
    msg.q = std::move(q);
    log(now_, m_, "send", "Q", frame, 0, all_subcarriers());
  }

  void on_arrive(const Event& e) {
    if (e.last) log(now_, e.node, "recv", std::string(payload_name(e.payload)), e.frame, e.symbol,
                    e.payload == Payload::Gram || e.payload == Payload::Inverse ? "-" : all_subcarriers());
    if (e.node == m_) {
      if (!e.last) return;
      auto it = ccu_inbox_.find(key(e.payload, e.frame, e.symbol, e.from));
      Msg& msg = it->second;
      if (!msg.ready) throw std::logic_error("CCU received a value before it was produced");
      if (e.payload == Payload::Gram) {
        ccu_gram_[e.frame] = std::move(msg.gram);
        push({now_ + p_.t_inv, Ev::InvDone, m_, e.frame, 0});
      } else if (e.payload == Payload::YTilde) {
        result_.frames[e.frame].y_tilde[e.symbol - 1] = std::move(msg.block);
        done_one(e.frame);
      }
      ccu_inbox_.erase(it);
      return;
    }
    if (e.last && (e.payload == Payload::Inverse || e.payload == Payload::Q)) {
      const Msg& msg = nodes_[e.node].inbox.at(key(e.payload, e.frame, e.symbol, e.from));
      forward_down(e.node, e.payload, e.frame, msg);
    }
    try_start(e.node);
  }

  void on_inv_done(int frame) {
    auto& fr = result_.frames[frame];
    const double t = now_ + p_.t_link;
    Msg& msg = send(s_.tree.root(), Payload::Inverse, frame, 0, m_, t, t);
    msg.ready = true;
    try {
      msg.gram = invert_gram(ccu_gram_.at(frame), p_.mode, p_.mmse_reg);
    } catch (const NotPositiveDefinite& ex) {
      msg.valid = false;
      msg.gram = PackedHermitian(p_.K);
      fr.aborted = ex.what();
    }
    ccu_gram_.erase(frame);
    log(now_, m_, "send", "INV", frame, 0);
  }

  // Arrival time that gates the start of `e`; nullopt while some input is still unknown or in the future.
  std::optional<double> ready_time(int n, const ScheduleEntry& e) {
    const bool by_value = s_.settings.granularity == Granularity::Value;
    double t = nodes_[n].prev_end;
    auto wait_for = [&](Payload pl, int symbol, int from, bool first_value) -> bool {
      auto& inbox = nodes_[n].inbox;
      auto it = inbox.find(key(pl, e.frame, symbol, from));
      if (it == inbox.end()) return false;
      const double a = first_value ? it->second.first : it->second.last;
      if (a > now_) return false;
      t = std::max(t, a);
      return true;
    };
    switch (e.task) {
      case Task::FFT: {
        const double a = e.symbol == 0 ? layout_.pilot_end(e.frame) : layout_.uplink_arrival(e.frame, e.symbol);
        if (a > now_) return std::nullopt;
        t = std::max(t, a);
        break;
      }
      case Task::Gram:
        for (int c : s_.tree.children(n))
          if (!wait_for(Payload::Gram, 0, c, by_value)) return std::nullopt;
        break;
      case Task::UlDecode:
        for (int c : s_.tree.children(n))
          if (!wait_for(Payload::YTilde, e.symbol, c, by_value)) return std::nullopt;
        break;
      case Task::Weights:
        if (!wait_for(Payload::Inverse, 0, upstream(n), false)) return std::nullopt;
        break;
      case Task::DlPrecode:
        if (!wait_for(Payload::Q, 0, upstream(n), false)) return std::nullopt;
        break;
      default: break;
    }
    return t;
  }

  void try_start(int n) {
    Node& node = nodes_[n];
    if (node.busy || node.next == node.tasks.size()) return;
    const ScheduleEntry& planned = node.tasks[node.next];
    auto ready = ready_time(n, planned);
    if (!ready) return;
    ScheduleEntry run = planned;
    run.start = *ready;
    run.duration = task_duration(run.ops, s_.rate);
    if (run.start != planned.start || run.end() != planned.end()) ++result_.timing_mismatches;
    node.busy = true;
    result_.executed[n].entries.push_back(run);
    log(run.start, n, "start", std::string(task_name(run.task)), run.frame, run.symbol,
        run.task == Task::UlDecode || run.task == Task::DlPrecode ? all_subcarriers() : "-");
    if (run.task == Task::Gram || run.task == Task::UlDecode) {
      const Payload pl = run.task == Task::Gram ? Payload::Gram : Payload::YTilde;
      send(upstream(n), pl, run.frame, run.symbol, n, stream_first(run.start, p_.t_link),
           stream_last(run.start, run.duration, p_.t_link));
    }
    push({run.end(), Ev::Finish, n, run.frame, run.symbol});
  }

  Msg& take(int n, Payload pl, int frame, int symbol, int from, double finish) {
    Msg& msg = nodes_[n].inbox.at(key(pl, frame, symbol, from));
    if (!msg.ready) throw std::logic_error("input consumed before it was produced");
    if (msg.last > finish) ++result_.causality_violations;
    return msg;
  }

  Msg& outgoing(int n, Payload pl, int frame, int symbol) {
    const int to = upstream(n);
    return (to == m_ ? ccu_inbox_ : nodes_[to].inbox).at(key(pl, frame, symbol, n));
  }

  ComplexVector receive_symbol(int n, const ComplexMatrix& rx, PeCounter* ops) {
    const std::size_t off = detail::bin_offset(p_);
    ComplexVector bins(p_.n_fft);
    for (int s = 0; s < p_.n_sc; ++s) bins[s + off] = rx(n, s);
    return fft_dit(fft_dit(std::move(bins), true), false, ops);
  }

  void on_finish(int n) {
    Node& node = nodes_[n];
    const ScheduleEntry& e = result_.executed[n].entries.back();
    const int f = e.frame;
    auto& fr = result_.frames[f];
    PeCounter ops;
    Local& loc = node.local[f];
    const std::size_t off = detail::bin_offset(p_);
    const bool inverse = uses_inverse(p_.mode);

    switch (e.task) {
      case Task::FFT:
        if (e.symbol == 0) loc.pilot_bins = receive_symbol(n, data(f).pilot_rx, &ops);
        else loc.ul_bins[e.symbol] = receive_symbol(n, data(f).ul_rx[e.symbol - 1], &ops);
        break;
      case Task::CE: {
        std::span<const cd> y(loc.pilot_bins.data() + off, static_cast<std::size_t>(p_.K));
        loc.h = estimate_channel(y, sc_.pilot, &ops);
        if (!inverse) loc.w = node_weights(nullptr, loc.h, p_.mode);
        break;
      }
      case Task::Gram: {
        std::vector<PackedHermitian> kids;
        for (int c : s_.tree.children(n)) {
          kids.push_back(std::move(take(n, Payload::Gram, f, 0, c, e.end()).gram));
          node.inbox.erase(key(Payload::Gram, f, 0, c));
        }
        Msg& out = outgoing(n, Payload::Gram, f, 0);
        out.gram = accumulate_gram(local_gram(loc.h, &ops), kids);
        out.ready = true;
        fr.link[n].up += PackedHermitian::packed_size(p_.K);
        log(e.end(), n, "send", "GRAM", f, 0);
        break;
      }
      case Task::Weights: {
        Msg& in = take(n, Payload::Inverse, f, 0, upstream(n), e.end());
        loc.weights_valid = in.valid;
        loc.w = node_weights(&in.gram, loc.h, p_.mode, &ops);
        fr.link[n].down += PackedHermitian::packed_size(p_.K);
        node.inbox.erase(key(Payload::Inverse, f, 0, upstream(n)));
        break;
      }
      case Task::UlDecode: {
        ComplexMatrix acc(p_.n_sc, p_.K);
        for (int c : s_.tree.children(n)) {
          const Msg& in = take(n, Payload::YTilde, f, e.symbol, c, e.end());
          for (std::size_t i = 0; i < acc.data().size(); ++i) acc.data()[i] += in.block.data()[i];
          node.inbox.erase(key(Payload::YTilde, f, e.symbol, c));
        }
        const auto& bins = loc.ul_bins.at(e.symbol);
        for (int s = 0; s < p_.n_sc; ++s) decode_accumulate(loc.w, bins[s + off], acc.row(s), &ops);
        loc.ul_bins.erase(e.symbol);
        Msg& out = outgoing(n, Payload::YTilde, f, e.symbol);
        out.block = std::move(acc);
        out.ready = true;
        fr.link[n].up += static_cast<std::uint64_t>(p_.n_sc) * p_.K;
        log(e.end(), n, "send", "YTILDE", f, e.symbol, all_subcarriers());
        break;
      }
      case Task::DlPrecode: {
        const Msg& in = take(n, Payload::Q, f, 0, upstream(n), e.end());
        const ComplexMatrix& q = (*in.q)[e.symbol - 1];
        for (int s = 0; s < p_.n_sc; ++s) fr.x[e.symbol - 1](n, s) = precode_local(loc.w, q.row(s), &ops);
        fr.link[n].down += static_cast<std::uint64_t>(p_.n_sc) * p_.K;
        if (e.symbol == p_.n_dl) node.inbox.erase(key(Payload::Q, f, 0, upstream(n)));
        break;
      }
      case Task::IFFT: {
        ComplexVector bins(p_.n_fft);
        for (int s = 0; s < p_.n_sc; ++s) bins[s + off] = fr.x[e.symbol - 1](n, s);
        fft_dit(std::move(bins), true, &ops);
        break;
      }
      case Task::WaitInv: break;
    }
    fr.ops[n][e.task] += ops.ops;
    log(e.end(), n, "finish", std::string(task_name(e.task)), f, e.symbol,
        e.task == Task::UlDecode || e.task == Task::DlPrecode ? all_subcarriers() : "-");

    node.busy = false;
    node.prev_end = e.end();
    ++node.next;
    if (node.next == node.tasks.size() || node.tasks[node.next].frame != f) {
      bool more = false;
      for (std::size_t i = node.next; i < node.tasks.size() && !more; ++i) more = node.tasks[i].frame == f;
      if (!more) node.local.erase(f);
    }
    done_one(f);
    try_start(n);
  }

  void done_one(int frame) {
    if (--remaining_[frame] == 0) finalize(frame);
  }

  void finalize(int frame) {
    auto& fr = result_.frames[frame];
    const FrameData& d = data(frame);
    ComplexMatrix h_hat(p_.M, p_.K);
    for (int m = 0; m < p_.M; ++m)
      for (int k = 0; k < p_.K; ++k) h_hat(m, k) = d.pilot_rx(m, k) / sc_.pilot;
    std::optional<CentralizedWeights> ref;
    if (fr.aborted.empty()) {
      try {
        ref = centralized_reference(h_hat, p_.mode, p_.mmse_reg);
      } catch (const RankDeficient& ex) {
        fr.aborted = ex.what();
      }
    }
    if (ref) {
      for (int u = 0; u < p_.n_ul(); ++u) {
        ComplexMatrix expect(p_.n_sc, p_.K);
        ComplexVector col(p_.M);
        for (int s = 0; s < p_.n_sc; ++s) {
          for (int m = 0; m < p_.M; ++m) col[m] = d.ul_rx[u](m, s);
          const auto v = ref->A * std::span<const cd>(col);
          std::copy(v.begin(), v.end(), expect.row(s).begin());
        }
        fr.ul_error.push_back(error_metrics(fr.y_tilde[u], expect));
        fr.symbol_error.push_back(error_metrics(fr.y_tilde[u], d.ul[u]));
      }
      for (int i = 0; i < p_.n_dl; ++i) {
        ComplexMatrix expect(p_.M, p_.n_sc);
        for (int s = 0; s < p_.n_sc; ++s) {
          const auto v = ref->W * d.dl[i].row(s);
          for (int m = 0; m < p_.M; ++m) expect(m, s) = v[m];
        }
        fr.dl_error.push_back(error_metrics(fr.x[i], expect));
      }
    }
    data_.erase(frame);
  }

  const Scenario& sc_;
  const SystemSchedule& s_;
  const SystemParams& p_;
  FrameLayout layout_;
  int m_;
  std::vector<Node> nodes_;
  std::map<Key, Msg> ccu_inbox_;
  std::map<int, PackedHermitian> ccu_gram_;
  std::map<int, FrameData> data_;
  std::vector<int> remaining_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0;
  SimulationResult result_;
};

}  // namespace detail

/// Runs every frame of `schedule` on `scenario`.
inline SimulationResult run_frames(const Scenario& scenario, const SystemSchedule& schedule) {
  return detail::Engine(scenario, schedule).run();
}

inline FrameResult run_frame(const Scenario& scenario, const SystemSchedule& schedule) {
  return run_frames(scenario, schedule).frames.front();
}

struct SweepReport {
  SimulationResult sim;
  std::vector<int> occupancy_at_frame_start;  // most occupied node
  int peak_occupancy = 0;
  bool periodic = true;
  bool backlog_free = true;
};

/// Back-to-back frames in steady state. The input-buffer pattern of every frame
/// must repeat that of the first one, shifted by whole frames.
inline SweepReport sweep_frames(const Scenario& sc, ScheduleSettings settings, int n_frames) {
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  settings.frames = n_frames;
  const auto sched = build_system_schedule(sc.params, sc.tree, settings);
  SweepReport r;
  r.sim = run_frames(sc, sched);
  const double tf = sc.params.t_frame();
  const FrameLayout layout(sc.params);
  r.occupancy_at_frame_start.assign(n_frames, 0);
  for (const auto& ns : r.sim.executed) {
    const auto bp = input_buffer(ns, sc.params);
    r.peak_occupancy = std::max(r.peak_occupancy, bp.peak);
    for (int f = 0; f < n_frames; ++f)
      r.occupancy_at_frame_start[f] = std::max(r.occupancy_at_frame_start[f], bp.occupancy_at(layout.frame_start(f)));
    std::vector<BufferInterval> first;
    for (const auto& b : bp.intervals)
      if (b.frame == 0) first.push_back(b);
    for (int f = 1; f < n_frames; ++f) {
      std::vector<BufferInterval> cur;
      for (const auto& b : bp.intervals)
        if (b.frame == f) cur.push_back(b);
      if (cur.size() != first.size()) {
        r.periodic = false;
        continue;
      }
      const double tol = 1e-9 * tf;
      for (std::size_t i = 0; i < cur.size(); ++i)
        if (cur[i].symbol != first[i].symbol || std::abs(cur[i].arrival - first[i].arrival - f * tf) > tol ||
            std::abs(cur[i].released - first[i].released - f * tf) > tol)
          r.periodic = false;
    }
  }
  for (int f = 1; f < n_frames; ++f)
    if (r.occupancy_at_frame_start[f] != r.occupancy_at_frame_start[std::min(1, n_frames - 1)])
      r.backlog_free = false;
  return r;
}

}  // namespace dmimo
