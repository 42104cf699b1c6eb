#include "cfd/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace cfd {
namespace {

// The FFTW planner is not re-entrant; execution of existing plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// ESTIMATE keeps plan selection deterministic across runs.
constexpr unsigned plan_flags = FFTW_ESTIMATE;

}  // namespace

namespace detail {
void* fft_alloc(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}
void fft_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

RealFft::RealFft(std::size_t n) : n_(n) {
  AlignedBuffer<double> r(n);
  AlignedBuffer<Complex> c(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_r2c_1d(len, r.data(), reinterpret_cast<fftw_complex*>(c.data()), plan_flags);
  inv_ = fftw_plan_dft_c2r_1d(len, reinterpret_cast<fftw_complex*>(c.data()), r.data(), plan_flags);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

RealFft::RealFft(RealFft&& o) noexcept : n_(o.n_), fwd_(o.fwd_), inv_(o.inv_) {
  o.fwd_ = nullptr;
  o.inv_ = nullptr;
}

RealFft& RealFft::operator=(RealFft&& o) noexcept {
  if (this != &o) {
    std::swap(n_, o.n_);
    std::swap(fwd_, o.fwd_);
    std::swap(inv_, o.inv_);
  }
  return *this;
}

void RealFft::forward(const double* in, Complex* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(Complex* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_), reinterpret_cast<fftw_complex*>(in), out);
}

ComplexFft::ComplexFft(std::size_t n) : n_(n) {
  AlignedBuffer<Complex> a(n), b(n);
  std::lock_guard lock(planner_mutex());
  const int len = static_cast<int>(n);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  fwd_ = fftw_plan_dft_1d(len, pa, pb, FFTW_FORWARD, plan_flags);
  inv_ = fftw_plan_dft_1d(len, pa, pb, FFTW_BACKWARD, plan_flags);
}

ComplexFft::~ComplexFft() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void ComplexFft::forward(const Complex* in, Complex* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void ComplexFft::inverse(const Complex* in, Complex* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(inv_), reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace cfd
