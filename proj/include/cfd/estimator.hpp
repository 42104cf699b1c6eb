#pragma once

#include <cstddef>
#include <vector>

#include "cfd/config.hpp"
#include "cfd/rake.hpp"

namespace cfd {

/// Column sums of Gamma' over time, one value per shift bin of the grid.
struct AccumulatedEnergy {
  SearchGrid grid;
  double bin_hz = 0.0;
  std::size_t num_frames = 0;
  std::vector<double> gamma_hat;   // D
  std::vector<int> shift_bins;     // absolute bin of each d
  std::vector<int> winning_pitch;  // t * D + d, absolute pitch bin

  std::size_t num_shifts() const { return gamma_hat.size(); }
  double shift_hz(std::size_t d) const { return shift_bins[d] * bin_hz; }
};

AccumulatedEnergy accumulate(const GammaSlice& slice, double bin_hz);

struct RefinedPeak {
  double shift_hz = 0.0;
  double score = 0.0;
  std::size_t index = 0;  // best integer d
  bool flat = false;      // gamma_hat constant; shift_hz is the lowest bin
};

/// Natural cubic spline through gamma_hat, maximised on a <= 0.1 Hz grid
/// within 1.5 bins of the best integer bin, then polished at the nearest
/// stationary point.
RefinedPeak refine_peak(const AccumulatedEnergy& acc);

struct ShiftPeak {
  double shift_hz = 0.0;
  double score = 0.0;
};

/// Refined local maxima, best first (ties to the lower shift), dropping any
/// candidate closer than min_separation_hz to one already kept.
std::vector<ShiftPeak> find_peaks(const AccumulatedEnergy& acc, std::size_t max_peaks, double min_separation_hz);

struct CfdEstimate {
  double f_d_hz = 0.0;
  double peak_score = 0.0;
  int shift_bin = 0;  // winning integer shift bin
  bool flat = false;
  std::vector<double> pitch_trace_hz;  // read at shift_bin
  std::vector<double> frame_score;     // Gamma'(t, shift_bin)
  double pitch_variance_hz2 = 0.0;
  bool is_speech = false;
  std::vector<ShiftPeak> secondary_peaks;
};

CfdEstimate estimate_cfd(const GammaSlice& slice, const RakeConfig& cfg);

/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(const std::vector<double>& v);

/// Constant-velocity Kalman filter with Rauch-Tung-Striebel smoothing.
/// Measurement noise of frame t is scaled by max(e_t)/e_t, so weak frames
/// count less; q_over_r is the process to measurement noise ratio.
std::vector<double> smooth_pitch_trace(const std::vector<double>& trace, const std::vector<double>& voiced_energy,
                                       double q_over_r = 0.01);

}  // namespace cfd
