#include "cfd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cfd {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': not a number: '" + v + "'");
  }
  if (pos != v.size()) throw InvalidInput("config key '" + key + "': trailing characters in '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw InvalidInput("config key '" + key + "': not an integer: '" + v + "'");
  return out;
}

}  // namespace

std::size_t RakeConfig::hop_samples() const {
  return static_cast<std::size_t>(std::llround(frame_shift_s * sample_rate));
}

void RakeConfig::validate() const {
  if (sample_rate <= 0) throw InvalidInput("sample_rate must be positive");
  if (fft_size != 2048 && fft_size != 4096 && fft_size != 8192)
    throw InvalidInput("fft_size must be one of 2048, 4096, 8192 (got " + std::to_string(fft_size) + ")");
  if (!(frame_shift_s > 0.0) || hop_samples() == 0) throw InvalidInput("frame_shift_s must be positive");
  if (!(pitch_min_hz > 0.0) || !(pitch_min_hz < pitch_max_hz))
    throw InvalidInput("pitch range must satisfy 0 < pitch_min_hz < pitch_max_hz");
  if (shift_min_hz < 0.0) throw InvalidInput("shift_min_hz must be >= 0 (negative offsets are not searched)");
  if (!(shift_min_hz <= shift_max_hz)) throw InvalidInput("shift_min_hz must not exceed shift_max_hz");
  if (sample_rate == 8000 && shift_max_hz > 3500.0)
    throw InvalidInput("shift_max_hz must be <= 3500 Hz at 8 kHz");
  if (shift_max_hz > sample_rate / 2.0) throw InvalidInput("shift_max_hz exceeds Nyquist");
  if (tau_max < 2) throw InvalidInput("tau_max must be >= 2");
  if (W < 0) throw InvalidInput("W must be >= 0");
  if (!(epsilon_floor > 0.0)) throw InvalidInput("epsilon_floor must be positive");
  if (!(variance_threshold_hz2 >= 0.0)) throw InvalidInput("variance_threshold_hz2 must be >= 0");
  if (max_peaks < 1) throw InvalidInput("max_peaks must be >= 1");
  if (!(peak_min_separation_hz >= 0.0)) throw InvalidInput("peak_min_separation_hz must be >= 0");
  if (!(smoother_q_over_r > 0.0)) throw InvalidInput("smoother_q_over_r must be positive");

  const double bin = bin_hz();
  const auto p_lo = static_cast<long long>(std::ceil(pitch_min_hz / bin));
  const auto p_hi = static_cast<long long>(std::floor(pitch_max_hz / bin));
  const auto d_lo = static_cast<long long>(std::ceil(shift_min_hz / bin));
  const auto d_hi = static_cast<long long>(std::floor(shift_max_hz / bin));
  if (p_lo > p_hi || p_lo < 1) throw InvalidInput("pitch range maps to an empty bin range");
  if (d_lo > d_hi) throw InvalidInput("shift range maps to an empty bin range");
}

bool apply_config_value(RakeConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "sample_rate") cfg.sample_rate = static_cast<int>(to_int(key, value));
  else if (key == "fft_size") cfg.fft_size = static_cast<std::size_t>(to_int(key, value));
  else if (key == "frame_shift_s") cfg.frame_shift_s = to_double(key, value);
  else if (key == "pitch_min_hz") cfg.pitch_min_hz = to_double(key, value);
  else if (key == "pitch_max_hz") cfg.pitch_max_hz = to_double(key, value);
  else if (key == "shift_min_hz") cfg.shift_min_hz = to_double(key, value);
  else if (key == "shift_max_hz") cfg.shift_max_hz = to_double(key, value);
  else if (key == "tau_max") cfg.tau_max = static_cast<int>(to_int(key, value));
  else if (key == "W") cfg.W = static_cast<int>(to_int(key, value));
  else if (key == "variance_threshold_hz2") cfg.variance_threshold_hz2 = to_double(key, value);
  else if (key == "epsilon_floor") cfg.epsilon_floor = to_double(key, value);
  else if (key == "max_peaks") cfg.max_peaks = static_cast<std::size_t>(to_int(key, value));
  else if (key == "peak_min_separation_hz") cfg.peak_min_separation_hz = to_double(key, value);
  else if (key == "smoother_q_over_r") cfg.smoother_q_over_r = to_double(key, value);
  else if (key == "direct_memory_budget_bytes")
    cfg.direct_memory_budget_bytes = static_cast<std::size_t>(to_int(key, value));
  else if (key == "window") {
    if (value == "hann") cfg.window = WindowType::hann;
    else if (value == "rectangular") cfg.window = WindowType::rectangular;
    else throw InvalidInput("config key 'window': expected hann or rectangular, got '" + value + "'");
  } else {
    return false;
  }
  return true;
}

RakeConfig parse_config(const std::string& text, RakeConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!apply_config_value(base, key, value))
      throw InvalidInput("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return base;
}

RakeConfig load_config_file(const std::string& path, RakeConfig base) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const RakeConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "sample_rate = " << cfg.sample_rate << '\n'
     << "fft_size = " << cfg.fft_size << '\n'
     << "frame_shift_s = " << cfg.frame_shift_s << '\n'
     << "pitch_min_hz = " << cfg.pitch_min_hz << '\n'
     << "pitch_max_hz = " << cfg.pitch_max_hz << '\n'
     << "shift_min_hz = " << cfg.shift_min_hz << '\n'
     << "shift_max_hz = " << cfg.shift_max_hz << '\n'
     << "tau_max = " << cfg.tau_max << '\n'
     << "W = " << cfg.W << '\n'
     << "variance_threshold_hz2 = " << cfg.variance_threshold_hz2 << '\n'
     << "epsilon_floor = " << cfg.epsilon_floor << '\n'
     << "max_peaks = " << cfg.max_peaks << '\n'
     << "peak_min_separation_hz = " << cfg.peak_min_separation_hz << '\n'
     << "smoother_q_over_r = " << cfg.smoother_q_over_r << '\n'
     << "direct_memory_budget_bytes = " << cfg.direct_memory_budget_bytes << '\n'
     << "window = " << (cfg.window == WindowType::hann ? "hann" : "rectangular") << '\n';
  return os.str();
}

}  // namespace cfd
