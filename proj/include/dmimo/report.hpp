#pragma once

// Text and CSV writers. Column orders are fixed:
//   critical path  symbol,N_op_CP,T_CP_s,available_s,ratio
//   schedule       node,task,symbol,start_s,end_s
//   deadlines      frame,symbol,node,completion_s,deadline_s,slack_s,met
//   event log      time_s,node,event,payload_class,symbol,subcarrier_block
//   op tallies     frame,node,FFT,CE,B_i,W_i,UL_decode,DL_precode,IFFT,total
//   grid           bandwidth_hz,K,f_clk_hz,nops_required,feasible,limiter

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "dmimo/dimensioning.hpp"
#include "dmimo/dse.hpp"
#include "dmimo/scheduler.hpp"
#include "dmimo/simulator.hpp"

namespace dmimo {

inline std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

namespace detail {
inline std::string time_str(double t) { return fmt(t, 12); }
}  // namespace detail

inline void write_dimension_text(std::ostream& os, const DimensioningReport& r) {
  const auto& p = r.params;
  const auto& o = r.ops;
  auto kv = [&](const char* k, const std::string& v) { os << k << ": " << v << '\n'; };
  auto us = [](const std::optional<double>& t) { return t ? fmt(*t * 1e6) : std::string("n/a"); };
  kv("mode", std::string(to_string(p.mode)));
  kv("K", std::to_string(p.K));
  kv("M", std::to_string(p.M));
  kv("N_hops", std::to_string(r.n_hops));
  kv("T_OFDM_us", fmt(p.t_ofdm * 1e6));
  kv("T_frame_us", fmt(p.t_frame() * 1e6));
  kv("N_op,CE", std::to_string(o.ce));
  kv("N_op,B", std::to_string(o.gram));
  kv("N_op,W", std::to_string(o.weights_product));
  kv("N_op,FFT", std::to_string(o.fft));
  kv("N_op,decode", std::to_string(o.decode));
  kv("N_op,precode", std::to_string(o.precode));
  kv("N_op,weights", std::to_string(o.weights));
  kv("N_op,OFDM", std::to_string(o.ofdm));
  kv("N_op,frame", std::to_string(o.per_frame(p)));
  kv("N_OPS,avg", fmt(r.nops_avg));
  for (const auto& row : r.critical.rows)
    os << "N_OPS,CP," << row.symbol << ": " << fmt(row.ratio) << '\n';
  kv("N_OPS,critical", fmt(r.critical.max));
  kv("N_OPS", fmt(r.nops));
  kv("N_OPS,asymptotic", fmt(r.nops_asymptotic));
  kv("T_inv_us", fmt(p.t_inv * 1e6));
  kv("T_inv,A_us", us(r.t_inv_a));
  kv("T_inv,B_us", us(r.t_inv_b));
  kv("N_PE", std::to_string(r.clock.n_pe));
  kv("f_clk_MHz", fmt(r.clock.f_clk / 1e6, 10));
  kv("N_hat_OPS", std::to_string(r.clock.n_hat));
  kv("max_T_inv_us", std::isfinite(r.slack.max_t_inv) ? fmt(r.slack.max_t_inv * 1e6) : "n/a");
  kv("max_K", std::to_string(r.slack.max_k));
  kv("max_N_hops", r.slack.max_n_hops == kUnbounded ? "unbounded" : std::to_string(r.slack.max_n_hops));
  kv("N_UL,PB", std::to_string(r.n_ul_pb));
  kv("N_UL,buffered", std::to_string(r.memory.n_ul_buffered));
  kv("Mem_input_bits", std::to_string(r.memory.input_bits));
  kv("Mem_processing_bits", std::to_string(r.memory.processing_bits));
  kv("Mem_output_bits", std::to_string(r.memory.output_bits));
  kv("Mem_channel_estimate_bits", std::to_string(r.memory.channel_estimate_bits));
  kv("Mem_weights_bits", std::to_string(r.memory.weights_bits));
  kv("Mem_twiddle_words", std::to_string(r.memory.twiddle_words));
  kv("Mem_total_bits", std::to_string(r.memory.total_bits()));
  kv("N_bits,up", std::to_string(r.link.bits_up));
  kv("N_bits,down", std::to_string(r.link.bits_down));
  kv("R_up,min_Mbps", fmt(r.link.min_rate_up / 1e6, 10));
  kv("R_down,min_Mbps", fmt(r.link.min_rate_down / 1e6, 10));
  kv("R_up_Gbps", fmt(r.link.matched_rate_up / 1e9, 10));
  kv("R_down_Gbps", fmt(r.link.matched_rate_down / 1e9, 10));
  kv("throughput_up_Mbps", fmt(r.link.throughput_up / 1e6, 10));
  kv("throughput_down_Mbps", fmt(r.link.throughput_down / 1e6, 10));
}

inline void write_critical_path_csv(std::ostream& os, const DimensioningReport& r) {
  os << "symbol,N_op_CP,T_CP_s,available_s,ratio\n";
  for (const auto& row : r.critical.rows)
    os << row.symbol << ',' << fmt(row.ops, 12) << ',' << detail::time_str(row.t_cp) << ','
       << detail::time_str(row.available) << ',' << fmt(row.ratio, 12) << '\n';
}

inline void write_schedule_csv(std::ostream& os, const std::vector<NodeSchedule>& nodes) {
  os << "node,task,symbol,start_s,end_s\n";
  for (const auto& n : nodes)
    for (const auto& e : n.entries)
      os << n.node << ',' << task_name(e.task) << ',' << e.symbol << ',' << detail::time_str(e.start) << ','
         << detail::time_str(e.end()) << '\n';
}

inline void write_deadlines_csv(std::ostream& os, const std::vector<DeadlineVerdict>& v) {
  os << "frame,symbol,node,completion_s,deadline_s,slack_s,met\n";
  for (const auto& d : v)
    os << d.frame << ',' << d.symbol << ',' << d.node << ',' << detail::time_str(d.completion) << ','
       << detail::time_str(d.deadline) << ',' << detail::time_str(d.slack) << ',' << (d.met ? 1 : 0) << '\n';
}

inline void write_deadlines_text(std::ostream& os, const std::vector<DeadlineVerdict>& v) {
  for (const auto& d : v)
    os << "frame " << d.frame << " DL " << d.symbol << ": completion " << fmt(d.completion * 1e6, 9)
       << " us, deadline " << fmt(d.deadline * 1e6, 9) << " us, slack " << fmt(d.slack * 1e6, 6) << " us "
       << (d.met ? "ok" : "MISSED") << '\n';
}

inline void write_event_log_csv(std::ostream& os, const std::vector<LogEvent>& log) {
  os << "time_s,node,event,payload_class,symbol,subcarrier_block\n";
  for (const auto& e : log)
    os << detail::time_str(e.time) << ',' << e.node << ',' << e.event << ',' << e.payload << ',' << e.symbol << ','
       << e.block << '\n';
}

inline void write_op_tally_csv(std::ostream& os, const SimulationResult& r) {
  os << "frame,node,FFT,CE,B_i,W_i,UL_decode,DL_precode,IFFT,total\n";
  for (const auto& f : r.frames)
    for (std::size_t n = 0; n < f.ops.size(); ++n) {
      const auto& t = f.ops[n];
      os << f.frame << ',' << n << ',' << t[Task::FFT] << ',' << t[Task::CE] << ',' << t[Task::Gram] << ','
         << t[Task::Weights] << ',' << t[Task::UlDecode] << ',' << t[Task::DlPrecode] << ',' << t[Task::IFFT] << ','
         << t.total() << '\n';
    }
}

inline void write_grid_csv(std::ostream& os, const FeasibilityGrid& g) {
  os << "bandwidth_hz,K,f_clk_hz,nops_required,feasible,limiter\n";
  for (const auto& c : g.cells)
    os << fmt(c.bandwidth_hz, 12) << ',' << c.k << ',' << fmt(c.f_clk_hz, 12) << ',' << fmt(c.nops_required, 12)
       << ',' << (c.feasible ? 1 : 0) << ',' << to_string(c.limiter) << '\n';
}

}  // namespace dmimo
