#include "cfd/overlap_save.hpp"

#include <string>

#include "cfd/config.hpp"

namespace cfd {
namespace {

std::size_t common_length(const std::vector<std::vector<double>>& filters) {
  if (filters.empty()) throw InvalidInput("overlap-save bank needs at least one filter");
  std::size_t k = 0;
  for (const auto& f : filters) k = std::max(k, f.size());
  if (k == 0) throw InvalidInput("overlap-save filters must not be empty");
  return k;
}

}  // namespace

OverlapSaveBank::OverlapSaveBank(const std::vector<std::vector<double>>& filters, std::size_t fft_size)
    : K_(common_length(filters)), fft_(fft_size) {
  if (fft_size < K_)
    throw InvalidInput("overlap-save block of " + std::to_string(fft_size) + " is shorter than the filter (" +
                       std::to_string(K_) + ")");
  const std::size_t n = fft_size;
  AlignedBuffer<double> buf(n);
  const double scale = 1.0 / static_cast<double>(n);
  spectra_.reserve(filters.size());
  for (const auto& f : filters) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = i < f.size() ? f[i] : 0.0;
    AlignedBuffer<Complex> spec(n / 2 + 1);
    fft_.forward(buf.data(), spec.data());
    for (std::size_t q = 0; q < spec.size(); ++q) spec[q] = std::conj(spec[q]) * scale;
    spectra_.push_back(std::move(spec));
  }
}

OverlapSaveBank::Workspace OverlapSaveBank::make_workspace() const {
  const std::size_t n = fft_.size();
  return Workspace{AlignedBuffer<double>(n), AlignedBuffer<Complex>(n / 2 + 1), AlignedBuffer<Complex>(n / 2 + 1),
                   AlignedBuffer<double>(n)};
}

void OverlapSaveBank::check_input(std::size_t x_len, std::size_t out_len) const {
  if (x_len + 1 < out_len + K_)
    throw InvalidInput("overlap-save input too short: need " + std::to_string(out_len + K_ - 1) + " samples, got " +
                       std::to_string(x_len));
}

std::vector<double> OverlapSaveBank::correlate(std::span<const double> x, std::size_t out_len,
                                               std::size_t filter) const {
  std::vector<double> out(out_len);
  auto ws = make_workspace();
  run(x, out_len, ws, [&](std::size_t k, std::size_t start, std::span<const double> v) {
    if (k != filter) return;
    for (std::size_t i = 0; i < v.size(); ++i) out[start + i] = v[i];
  });
  return out;
}

}  // namespace cfd
