#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

namespace cfd {

/// Raised when caller-supplied data or parameters violate a precondition.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for environment failures (files, resource budgets).
class RuntimeFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class WindowType { hann, rectangular };

/// All free parameters of the estimator. Defaults follow the conventional
/// 8 kHz HF speech setup: 50-400 Hz pitch, 0-3500 Hz shift search, 20 ms hop.
struct RakeConfig {
  int sample_rate = 8000;
  std::size_t fft_size = 4096;
  double frame_shift_s = 0.02;
  double pitch_min_hz = 50.0;
  double pitch_max_hz = 400.0;
  double shift_min_hz = 0.0;
  double shift_max_hz = 3500.0;
  int tau_max = 5;
  int W = 2;
  double variance_threshold_hz2 = 25.0;
  double epsilon_floor = 1e-12;
  WindowType window = WindowType::hann;

  // Secondary-peak search over the accumulated energy.
  std::size_t max_peaks = 3;
  double peak_min_separation_hz = 50.0;

  // Kalman smoother process/measurement noise ratio (bins^2 per frame).
  double smoother_q_over_r = 0.01;

  // Upper bound for a dense T x P x D tensor from the direct engine.
  std::size_t direct_memory_budget_bytes = std::size_t{1} << 30;

  double bin_hz() const { return static_cast<double>(sample_rate) / static_cast<double>(fft_size); }
  std::size_t hop_samples() const;

  /// Throws InvalidInput when the configuration is inconsistent.
  void validate() const;
};

/// Parses flat `key = value` text. `#` starts a comment. Unknown keys throw.
RakeConfig parse_config(const std::string& text, RakeConfig base = {});
RakeConfig load_config_file(const std::string& path, RakeConfig base = {});

/// Applies one key/value pair; returns false when the key is unknown.
bool apply_config_value(RakeConfig& cfg, const std::string& key, const std::string& value);

/// Renders every field as `key = value` lines (round-trips through parse_config).
std::string format_config(const RakeConfig& cfg);

}  // namespace cfd
