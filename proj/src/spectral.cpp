#include "cfd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cfd/fft.hpp"
#include "cfd/parallel.hpp"

namespace cfd {

std::size_t frame_count(std::size_t length, std::size_t fft_size, std::size_t hop) {
  if (length < fft_size || hop == 0) return 0;
  return (length - fft_size) / hop + 1;
}

std::vector<double> make_window(WindowType type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (type == WindowType::hann) {
    // periodic Hann
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

LogSpectrogram stft_log_psd(const AudioSegment& seg, const RakeConfig& cfg, unsigned threads) {
  cfg.validate();
  if (seg.sample_rate != cfg.sample_rate)
    throw InvalidInput("sample rate mismatch: segment is " + std::to_string(seg.sample_rate) + " Hz, config expects " +
                       std::to_string(cfg.sample_rate) + " Hz");
  const std::size_t n = cfg.fft_size;
  const std::size_t hop = cfg.hop_samples();
  const std::size_t frames = frame_count(seg.samples.size(), n, hop);
  if (frames == 0)
    throw InvalidInput("segment of " + std::to_string(seg.samples.size()) + " samples is shorter than one frame (" +
                       std::to_string(n) + ")");

  LogSpectrogram out;
  out.num_frames = frames;
  out.num_bins = n / 2 + 1;
  out.fft_size = n;
  out.frame_shift_s = static_cast<double>(hop) / seg.sample_rate;
  out.bin_hz = static_cast<double>(seg.sample_rate) / static_cast<double>(n);
  out.log_floor = std::log(cfg.epsilon_floor);
  out.values.resize(frames * out.num_bins);

  const auto window = make_window(cfg.window, n);
  const RealFft fft(n);
  const double eps = cfg.epsilon_floor;

  parallel_chunks(frames, resolve_threads(threads), [&](unsigned, std::size_t begin, std::size_t end) {
    AlignedBuffer<double> buf(n);
    AlignedBuffer<Complex> spec(n / 2 + 1);
    for (std::size_t t = begin; t < end; ++t) {
      const double* x = seg.samples.data() + t * hop;
      for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * window[i];
      fft.forward(buf.data(), spec.data());
      auto row = out.frame(t);
      for (std::size_t f = 0; f < row.size(); ++f) row[f] = std::log(std::max(std::norm(spec[f]), eps));
    }
  });
  return out;
}

}  // namespace cfd
