#pragma once

// System parameters, TDD frame layout and the flat key=value configuration
// format shared by every tool in the project.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmimo {

enum class Mode { CB, ZF, MMSE };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::CB: return "CB";
    case Mode::ZF: return "ZF";
    case Mode::MMSE: return "MMSE";
  }
  return "?";
}

inline Mode parse_mode(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "CB") return Mode::CB;
  if (s == "ZF") return Mode::ZF;
  if (s == "MMSE") return Mode::MMSE;
  throw std::invalid_argument("unknown processing mode '" + std::string(text) + "'");
}

/// Whether the mode needs the central Gram inversion.
inline bool uses_inverse(Mode m) { return m != Mode::CB; }

struct SystemParams {
  int K = 1;             // terminals
  int M = 1;             // antennas, one per node
  int n_fft = 64;
  int n_sc = 48;
  int n_ul1 = 0;         // uplink symbols before the pilot
  int n_ul2 = 0;         // uplink symbols after the pilot
  int n_dl = 0;
  double f_sample = 1e6; // Hz
  double t_ofdm = 1e-4;  // s
  double t_link = 0.0;   // per-value link latency, s
  double t_inv = 0.0;    // central inversion time, s
  int w_comp = 24;       // bits, real+imaginary
  int w_symbol = 4;
  int w_adc = 12;
  int w_dac = 12;
  Mode mode = Mode::ZF;
  double mmse_reg = 0.0;
  int tree_arity = 2;
  std::optional<int> cp_len;  // defaults to n_fft / 16
  int n_pe = 1;

  int n_ul() const { return n_ul1 + n_ul2; }
  int n_symbols() const { return n_ul1 + n_ul2 + n_dl + 3; }
  double t_frame() const { return n_symbols() * t_ofdm; }
  int cyclic_prefix() const { return cp_len.value_or(n_fft / 16); }
  /// Effective regularization added to the Gram diagonal before inversion.
  double regularization() const { return mode == Mode::MMSE ? mmse_reg : 0.0; }
};

struct Violation {
  std::string field;
  std::string rule;
};

inline std::vector<Violation> validate(const SystemParams& p) {
  std::vector<Violation> out;
  auto check = [&](bool ok, std::string field, std::string rule) {
    if (!ok) out.push_back({std::move(field), std::move(rule)});
  };
  check(p.K >= 1, "K", "K >= 1");
  check(p.M >= 1, "M", "M >= 1");
  if (uses_inverse(p.mode))
    check(p.M >= p.K, "M", "M >= K required for " + std::string(to_string(p.mode)));
  check(p.n_fft >= 1, "N_FFT", "N_FFT >= 1");
  check(p.n_sc >= 0, "N_SC", "N_SC >= 0");
  check(p.n_sc <= p.n_fft, "N_SC", "N_SC <= N_FFT");
  check(p.n_ul1 >= 0, "N_UL1", "N_UL1 >= 0");
  check(p.n_ul2 >= 0, "N_UL2", "N_UL2 >= 0");
  check(p.n_dl >= 0, "N_DL", "N_DL >= 0");
  check(p.f_sample > 0, "f_sample", "f_sample > 0");
  check(p.t_ofdm > 0, "T_OFDM", "T_OFDM > 0");
  check(p.t_link >= 0, "T_link", "T_link >= 0");
  check(p.t_inv >= 0, "T_inv", "T_inv >= 0");
  check(p.w_comp > 0, "W_comp", "W_comp > 0");
  check(p.w_symbol > 0, "W_symbol", "W_symbol > 0");
  check(p.w_adc > 0, "W_ADC", "W_ADC > 0");
  check(p.w_dac > 0, "W_DAC", "W_DAC > 0");
  check(p.mmse_reg >= 0, "mmse_reg", "mmse_reg >= 0");
  check(p.tree_arity >= 1, "tree_arity", "tree_arity >= 1");
  check(p.n_pe >= 1, "N_PE", "N_PE >= 1");
  if (p.cp_len) check(*p.cp_len >= 0 && *p.cp_len <= p.n_fft, "cp_len", "0 <= cp_len <= N_FFT");
  return out;
}

struct DerivedTiming {
  double t_ofdm = 0;
  double t_frame = 0;
  int n_ul = 0;
};

/// Frame duration from the symbol duration: pilot and two guard slots add three symbols.
inline DerivedTiming derive_timing(const SystemParams& p, double t_ofdm) {
  if (!(t_ofdm > 0)) throw std::invalid_argument("T_OFDM must be positive");
  return {t_ofdm, p.n_symbols() * t_ofdm, p.n_ul()};
}

/// Inverse direction: symbol duration from a frame duration.
inline DerivedTiming timing_from_frame(const SystemParams& p, double t_frame) {
  if (!(t_frame > 0)) throw std::invalid_argument("T_frame must be positive");
  return {t_frame / p.n_symbols(), t_frame, p.n_ul()};
}

/// Slot arithmetic for the generalized frame
/// [UL1 x N_UL1 | pilot | UL2 x N_UL2 | guard | DL x N_DL | guard].
/// Uplink symbols are numbered 1..N_UL in arrival order, downlink 1..N_DL.
class FrameLayout {
 public:
  explicit FrameLayout(const SystemParams& p)
      : t_ofdm_(p.t_ofdm), n_ul1_(p.n_ul1), n_ul2_(p.n_ul2), n_dl_(p.n_dl),
        n_symbols_(p.n_symbols()) {}

  double t_frame() const { return n_symbols_ * t_ofdm_; }
  double frame_start(int frame) const { return frame * t_frame(); }
  int pilot_slot() const { return n_ul1_; }
  double pilot_end(int frame) const { return frame_start(frame) + (pilot_slot() + 1) * t_ofdm_; }

  int uplink_slot(int ul) const { return ul <= n_ul1_ ? ul - 1 : ul; }
  /// Time the last sample of uplink symbol `ul` has been received.
  double uplink_arrival(int frame, int ul) const {
    return frame_start(frame) + (uplink_slot(ul) + 1) * t_ofdm_;
  }
  int downlink_slot(int dl) const { return n_ul1_ + n_ul2_ + 1 + dl; }
  /// Transmission start of downlink symbol `dl`; its samples must be ready by then.
  double downlink_deadline(int frame, int dl) const {
    return frame_start(frame) + downlink_slot(dl) * t_ofdm_;
  }
  bool is_after_pilot(int ul) const { return ul > n_ul1_; }
  int n_ul() const { return n_ul1_ + n_ul2_; }
  int n_dl() const { return n_dl_; }

 private:
  double t_ofdm_;
  int n_ul1_, n_ul2_, n_dl_, n_symbols_;
};

/// LTE-like reference system. M=255 gives a binary tree with 8 hops to the
/// furthest node.
inline SystemParams lte_preset() {
  SystemParams p;
  p.K = 20;
  p.M = 255;
  p.n_fft = 2048;
  p.n_sc = 1200;
  p.n_ul1 = 0;
  p.n_ul2 = 2;
  p.n_dl = 2;
  p.f_sample = 30.72e6;
  p.t_ofdm = 0.5e-3 / p.n_symbols();
  p.t_link = 0.5e-6;
  p.t_inv = 40e-6;
  p.w_comp = 24;
  p.w_symbol = 4;
  p.w_adc = 12;
  p.w_dac = 12;
  p.mode = Mode::ZF;
  p.tree_arity = 2;
  return p;
}

// ---------------------------------------------------------------------------
// key=value configuration

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Parses `key=value` lines; `#` starts a comment. Later keys override earlier ones.
inline ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

}  // namespace detail

/// Applies the SystemParams keys of `cfg` onto `p` and returns the keys it did
/// not recognise, so callers can consume their own settings.
inline ConfigMap apply_config(SystemParams& p, const ConfigMap& cfg) {
  ConfigMap rest;
  std::optional<double> t_frame;
  for (const auto& [key, value] : cfg) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "K") p.K = parse_int(key, value);
    else if (key == "M") p.M = parse_int(key, value);
    else if (key == "N_FFT") p.n_fft = parse_int(key, value);
    else if (key == "N_SC") p.n_sc = parse_int(key, value);
    else if (key == "N_UL1") p.n_ul1 = parse_int(key, value);
    else if (key == "N_UL2") p.n_ul2 = parse_int(key, value);
    else if (key == "N_DL") p.n_dl = parse_int(key, value);
    else if (key == "f_sample_hz") p.f_sample = parse_double(key, value);
    else if (key == "T_OFDM_s") p.t_ofdm = parse_double(key, value);
    else if (key == "T_frame_s") t_frame = parse_double(key, value);
    else if (key == "T_link_s") p.t_link = parse_double(key, value);
    else if (key == "T_inv_s") p.t_inv = parse_double(key, value);
    else if (key == "W_comp") p.w_comp = parse_int(key, value);
    else if (key == "W_symbol") p.w_symbol = parse_int(key, value);
    else if (key == "W_ADC") p.w_adc = parse_int(key, value);
    else if (key == "W_DAC") p.w_dac = parse_int(key, value);
    else if (key == "mode") {
      try {
        p.mode = parse_mode(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "mmse_reg") p.mmse_reg = parse_double(key, value);
    else if (key == "tree_arity") p.tree_arity = parse_int(key, value);
    else if (key == "cp_len") p.cp_len = parse_int(key, value);
    else if (key == "N_PE") p.n_pe = parse_int(key, value);
    else rest[key] = value;
  }
  // T_frame is applied last so it sees the final symbol counts.
  if (t_frame) {
    if (!(*t_frame > 0)) throw ConfigError("key 'T_frame_s': must be positive");
    p.t_ofdm = timing_from_frame(p, *t_frame).t_ofdm;
  }
  return rest;
}

}  // namespace dmimo
