#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cfd/comb.hpp"
#include "cfd/config.hpp"
#include "cfd/spectral.hpp"

namespace cfd {

/// Integer-bin hypothesis grid: pitch bins [pitch_lo, pitch_hi] and shift
/// bins [shift_lo, shift_hi], both inclusive.
struct SearchGrid {
  int pitch_lo = 0;
  int pitch_hi = 0;
  int shift_lo = 0;
  int shift_hi = 0;

  std::size_t num_pitches() const { return static_cast<std::size_t>(pitch_hi - pitch_lo + 1); }
  std::size_t num_shifts() const { return static_cast<std::size_t>(shift_hi - shift_lo + 1); }
};

/// Maps the Hz ranges of `cfg` onto the bins of `spec`.
SearchGrid make_grid(const RakeConfig& cfg, const LogSpectrogram& spec);
void validate_grid(const SearchGrid& grid, std::size_t num_bins);

/// Dense Gamma(t, p, d), index ((t * P) + p) * D + d with p, d relative to the grid.
struct GammaTensor {
  SearchGrid grid;
  std::size_t num_frames = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t p, std::size_t d) const {
    return values[(t * grid.num_pitches() + p) * grid.num_shifts() + d];
  }
};

/// Max over pitch per (t, d) and the absolute pitch bin attaining it.
struct GammaSlice {
  SearchGrid grid;
  std::size_t num_frames = 0;
  std::vector<double> gamma_prime;  // t * D + d
  std::vector<int> winning_pitch;   // absolute pitch bin

  std::size_t num_shifts() const { return grid.num_shifts(); }
  double gamma(std::size_t t, std::size_t d) const { return gamma_prime[t * num_shifts() + d]; }
  int pitch(std::size_t t, std::size_t d) const { return winning_pitch[t * num_shifts() + d]; }
};

/// Weighted comb sum at absolute shift bin `shift` for one log-PSD frame.
/// Bins outside the frame read `log_floor`. Taps are accumulated in offset order.
double comb_response(std::span<const double> frame, double log_floor, const HarmonicComb& comb, int shift);

std::vector<HarmonicComb> build_combs(const SearchGrid& grid, const WeightTable& table);

/// Reference engine: literal weighted sum for every (t, p, d).
/// Throws RuntimeFailure when the tensor would exceed the memory budget.
GammaTensor gamma_direct(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table,
                         std::size_t memory_budget_bytes);
GammaTensor gamma_direct(const LogSpectrogram& spec, const RakeConfig& cfg);

/// Max over pitch with ties going to the lowest pitch bin.
GammaSlice reduce_max(const GammaTensor& tensor);

/// The reference engine streamed frame by frame: same arithmetic as
/// reduce_max(gamma_direct(...)) without the dense tensor.
GammaSlice direct_slice(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table,
                        unsigned threads = 1);
GammaSlice direct_slice(const LogSpectrogram& spec, const RakeConfig& cfg, unsigned threads = 1);

/// How the fast engine forms the comb correlation along frequency.
enum class PcKernel {
  /// The comb spectrum factors into the triangle spectrum times a sum of
  /// tau_max linear-phase terms. The triangle product is taken in the
  /// transform domain once per frame (overlap-save); each linear-phase term
  /// is an exact shift by h * pitch bins and is applied as an index offset.
  harmonic_shift,
  /// Every pitch comb is multiplied in the transform domain on its own;
  /// neighbouring pitches share the forward block transforms.
  comb_spectra,
};

/// Fast engine: correlation of each log-PSD frame with the pitch combs along
/// the frequency axis in the transform (power cepstral) domain, with linear
/// semantics from overlap-save blocks over the edge-extended frame. Values
/// within the transform rounding bound of the running maximum are settled by
/// the sparse reference sum, so gamma_prime and winning_pitch match
/// reduce_max(gamma_direct(...)) including the lowest-pitch tie-break.
class PcEngine {
public:
  PcEngine(const SearchGrid& grid, const WeightTable& table, std::size_t num_bins, double log_floor,
           PcKernel kernel = PcKernel::harmonic_shift);
  ~PcEngine();
  PcEngine(PcEngine&&) noexcept;
  PcEngine& operator=(PcEngine&&) noexcept;

  GammaSlice run(const LogSpectrogram& spec, unsigned threads = 1) const;

  const SearchGrid& grid() const;
  PcKernel kernel() const;
  /// Number of overlap-save banks in use.
  std::size_t num_banks() const;

  struct Impl;

private:
  std::unique_ptr<Impl> impl_;
};

GammaSlice gamma_pc(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table,
                    unsigned threads = 1, PcKernel kernel = PcKernel::harmonic_shift);
GammaSlice gamma_pc(const LogSpectrogram& spec, const RakeConfig& cfg, unsigned threads = 1,
                    PcKernel kernel = PcKernel::harmonic_shift);

}  // namespace cfd
