#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfd/fft.hpp"

namespace cfd {

/// Linear cross-correlation of one input against a bank of FIR filters of
/// common length K using overlap-save blocks of size `fft_size`:
///
///   out_k[i] = sum_{j < K} filter_k[j] * x[i + j],   0 <= i < out_len
///
/// Each block of the input is transformed once and shared by every filter.
/// Only the first fft_size - K + 1 outputs of a block are kept, so the
/// circular wrap never reaches a kept sample.
class OverlapSaveBank {
public:
  OverlapSaveBank(const std::vector<std::vector<double>>& filters, std::size_t fft_size);

  std::size_t filter_length() const { return K_; }
  std::size_t fft_size() const { return fft_.size(); }
  std::size_t num_filters() const { return spectra_.size(); }
  std::size_t valid_per_block() const { return fft_.size() - K_ + 1; }
  std::size_t blocks_for(std::size_t out_len) const { return (out_len + valid_per_block() - 1) / valid_per_block(); }

  struct Workspace {
    AlignedBuffer<double> block;
    AlignedBuffer<Complex> block_spec;
    AlignedBuffer<Complex> product;
    AlignedBuffer<double> result;
  };
  Workspace make_workspace() const;

  /// Calls sink(filter_index, out_start, values) for every block and filter;
  /// `values` holds outputs out_start .. out_start + values.size() - 1.
  /// Requires x.size() >= out_len + K - 1.
  template <typename Sink>
  void run(std::span<const double> x, std::size_t out_len, Workspace& ws, Sink&& sink) const {
    check_input(x.size(), out_len);
    const std::size_t n = fft_.size();
    const std::size_t half = n / 2 + 1;
    const std::size_t valid = valid_per_block();
    for (std::size_t start = 0; start < out_len; start += valid) {
      const std::size_t avail = std::min(n, x.size() - start);
      for (std::size_t i = 0; i < avail; ++i) ws.block[i] = x[start + i];
      for (std::size_t i = avail; i < n; ++i) ws.block[i] = 0.0;
      fft_.forward(ws.block.data(), ws.block_spec.data());
      const std::size_t count = std::min(valid, out_len - start);
      for (std::size_t k = 0; k < spectra_.size(); ++k) {
        multiply_spectra(ws.block_spec.data(), spectra_[k].data(), ws.product.data(), half);
        fft_.inverse(ws.product.data(), ws.result.data());
        sink(k, start, std::span<const double>(ws.result.data(), count));
      }
    }
  }

  /// Single-filter convenience wrapper.
  std::vector<double> correlate(std::span<const double> x, std::size_t out_len, std::size_t filter = 0) const;

private:
  static void multiply_spectra(const Complex* a, const Complex* b, Complex* out, std::size_t n) {
    // plain arithmetic; std::complex operator* takes the slow inf/nan path
    const double* x = reinterpret_cast<const double*>(a);
    const double* y = reinterpret_cast<const double*>(b);
    double* z = reinterpret_cast<double*>(out);
    for (std::size_t q = 0; q < n; ++q) {
      const double xr = x[2 * q], xi = x[2 * q + 1], yr = y[2 * q], yi = y[2 * q + 1];
      z[2 * q] = xr * yr - xi * yi;
      z[2 * q + 1] = xr * yi + xi * yr;
    }
  }
  void check_input(std::size_t x_len, std::size_t out_len) const;

  std::size_t K_ = 0;
  RealFft fft_;
  // conj(FFT(filter)) / fft_size
  std::vector<AlignedBuffer<Complex>> spectra_;
};

}  // namespace cfd
