#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cfd/config.hpp"
#include "cfd/spectral.hpp"

namespace testing {

inline cfd::LogSpectrogram random_spectrogram(std::mt19937_64& rng, std::size_t frames, std::size_t bins,
                                              double floor = std::log(1e-12)) {
  cfd::LogSpectrogram s;
  s.num_frames = frames;
  s.num_bins = bins;
  s.fft_size = 2 * (bins - 1);
  s.frame_shift_s = 0.02;
  s.bin_hz = 8000.0 / static_cast<double>(s.fft_size);
  s.log_floor = floor;
  s.values.resize(frames * bins);
  std::normal_distribution<double> g(0.0, 3.0);
  for (auto& v : s.values) v = std::max(floor, g(rng));
  return s;
}

inline cfd::AudioSegment tone(double hz, double seconds, double amp = 1.0, int rate = 8000) {
  cfd::AudioSegment seg;
  seg.sample_rate = rate;
  seg.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (std::size_t i = 0; i < seg.samples.size(); ++i)
    seg.samples[i] = amp * std::cos(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return seg;
}

inline std::size_t argmax(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace testing
