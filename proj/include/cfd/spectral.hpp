#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfd/config.hpp"

namespace cfd {

/// Mono audio, samples in [-1, 1].
struct AudioSegment {
  std::vector<double> samples;
  int sample_rate = 8000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Row-major T x F matrix of floored natural-log power values.
struct LogSpectrogram {
  std::vector<double> values;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::size_t fft_size = 0;
  double frame_shift_s = 0.0;
  double bin_hz = 0.0;
  double log_floor = 0.0;  // log(epsilon_floor); also the value read outside [0, F-1]

  std::span<const double> frame(std::size_t t) const { return {values.data() + t * num_bins, num_bins}; }
  std::span<double> frame(std::size_t t) { return {values.data() + t * num_bins, num_bins}; }
  double at(std::size_t t, std::size_t f) const { return values[t * num_bins + f]; }
};

/// Number of full frames for `length` samples (0 when shorter than one frame).
std::size_t frame_count(std::size_t length, std::size_t fft_size, std::size_t hop);

std::vector<double> make_window(WindowType type, std::size_t n);

/// Short-time log power spectrum: values = log(max(|X|^2, epsilon_floor)).
/// Frames are fft_size long, hop = frame_shift_s * sample_rate, no padding.
LogSpectrogram stft_log_psd(const AudioSegment& seg, const RakeConfig& cfg, unsigned threads = 1);

}  // namespace cfd
