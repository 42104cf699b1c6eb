#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace cfd {

using Complex = std::complex<double>;

namespace detail {
void* fft_alloc(std::size_t bytes);
void fft_free(void* p) noexcept;
struct FftFree {
  void operator()(void* p) const noexcept { fft_free(p); }
};
}  // namespace detail

/// SIMD-aligned heap array suitable for the FFT plans below.
template <typename T>
class AlignedBuffer {
public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t n) : data_(static_cast<T*>(detail::fft_alloc(n * sizeof(T)))), size_(n) {
    for (std::size_t i = 0; i < n; ++i) data_.get()[i] = T{};
  }

  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  T& operator[](std::size_t i) { return data_.get()[i]; }
  const T& operator[](std::size_t i) const { return data_.get()[i]; }
  std::span<T> span() { return {data(), size_}; }
  std::span<const T> span() const { return {data(), size_}; }

private:
  std::unique_ptr<T, detail::FftFree> data_;
  std::size_t size_ = 0;
};

/// Real-to-complex transform pair of length n (unnormalized, FFTW sign convention).
/// Execution is thread-safe; buffers passed in must come from AlignedBuffer.
class RealFft {
public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  void forward(const double* in, Complex* out) const;
  /// Destroys `in`.
  void inverse(Complex* in, double* out) const;

private:
  std::size_t n_ = 0;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

/// Complex transform pair of length n (unnormalized).
class ComplexFft {
public:
  explicit ComplexFft(std::size_t n);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::size_t size() const { return n_; }
  void forward(const Complex* in, Complex* out) const;
  void inverse(const Complex* in, Complex* out) const;

private:
  std::size_t n_ = 0;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

/// Smallest 2^k >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace cfd
