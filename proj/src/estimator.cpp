#include "cfd/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cfd/spline.hpp"

namespace cfd {
namespace {

constexpr double kDenseStepHz = 0.1;
// Refinement stays within this many bins of the integer maximum.
constexpr double kSearchBins = 1.5;

NaturalCubicSpline make_spline(const AccumulatedEnergy& acc) {
  std::vector<double> x(acc.num_shifts());
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = acc.shift_hz(d);
  return NaturalCubicSpline(x, acc.gamma_hat);
}

ShiftPeak refine_around(const NaturalCubicSpline& s, const AccumulatedEnergy& acc, std::size_t centre) {
  const double xc = acc.shift_hz(centre);
  const double lo = std::max(s.x_min(), xc - kSearchBins * acc.bin_hz);
  const double hi = std::min(s.x_max(), xc + kSearchBins * acc.bin_hz);

  ShiftPeak best{xc, acc.gamma_hat[centre]};
  auto consider = [&](double x) {
    if (x < lo || x > hi) return;
    const double v = s(x);
    if (v > best.score || (v == best.score && x < best.shift_hz)) best = {x, v};
  };
  const auto steps_lo = static_cast<long>(std::floor((lo - xc) / kDenseStepHz));
  const auto steps_hi = static_cast<long>(std::ceil((hi - xc) / kDenseStepHz));
  for (long k = steps_lo; k <= steps_hi; ++k) consider(xc + k * kDenseStepHz);
  consider(lo);
  consider(hi);

  // the exact maximiser sits at a stationary point next to the dense winner
  const double bx = best.shift_hz;
  const std::size_t seg_lo = s.segment_of(bx - kDenseStepHz);
  const std::size_t seg_hi = s.segment_of(bx + kDenseStepHz);
  for (std::size_t seg = seg_lo; seg <= seg_hi; ++seg)
    for (double r : s.stationary_points(seg))
      if (std::abs(r - bx) <= kDenseStepHz) consider(r);
  return best;
}

bool is_flat(const std::vector<double>& y) {
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  return *mx - *mn <= 1e-12 * std::max(1.0, std::abs(*mx));
}

std::size_t first_argmax(const std::vector<double>& y) {
  return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

}  // namespace

AccumulatedEnergy accumulate(const GammaSlice& slice, double bin_hz) {
  const std::size_t D = slice.num_shifts();
  if (slice.num_frames == 0) throw InvalidInput("accumulate: slice has no frames");
  if (slice.gamma_prime.size() != slice.num_frames * D) throw InvalidInput("accumulate: slice size mismatch");
  AccumulatedEnergy acc;
  acc.grid = slice.grid;
  acc.bin_hz = bin_hz;
  acc.num_frames = slice.num_frames;
  acc.gamma_hat.assign(D, 0.0);
  for (std::size_t t = 0; t < slice.num_frames; ++t)
    for (std::size_t d = 0; d < D; ++d) acc.gamma_hat[d] += slice.gamma(t, d);
  acc.shift_bins.resize(D);
  for (std::size_t d = 0; d < D; ++d) acc.shift_bins[d] = slice.grid.shift_lo + static_cast<int>(d);
  acc.winning_pitch = slice.winning_pitch;
  return acc;
}

RefinedPeak refine_peak(const AccumulatedEnergy& acc) {
  if (acc.num_shifts() < 5) throw InvalidInput("refine_peak needs at least 5 shift bins");
  const std::size_t best = first_argmax(acc.gamma_hat);
  if (is_flat(acc.gamma_hat)) return {acc.shift_hz(0), acc.gamma_hat[0], 0, true};
  const auto spline = make_spline(acc);
  const ShiftPeak p = refine_around(spline, acc, best);
  return {p.shift_hz, p.score, best, false};
}

std::vector<ShiftPeak> find_peaks(const AccumulatedEnergy& acc, std::size_t max_peaks, double min_separation_hz) {
  if (max_peaks < 1) throw InvalidInput("find_peaks: max_peaks must be >= 1");
  const auto& y = acc.gamma_hat;
  const std::size_t D = y.size();
  if (D < 5) throw InvalidInput("find_peaks needs at least 5 shift bins");
  if (is_flat(y)) return {{acc.shift_hz(0), y[0]}};

  const auto spline = make_spline(acc);
  std::vector<ShiftPeak> cand;
  for (std::size_t d = 0; d < D; ++d) {
    // a plateau is represented by its leftmost bin
    const bool rises = d == 0 || y[d] > y[d - 1];
    const bool falls = d + 1 == D || y[d] >= y[d + 1];
    if (rises && falls) cand.push_back(refine_around(spline, acc, d));
  }
  std::stable_sort(cand.begin(), cand.end(), [](const ShiftPeak& a, const ShiftPeak& b) {
    const double tol = 1e-12 * std::max({1.0, std::abs(a.score), std::abs(b.score)});
    if (std::abs(a.score - b.score) > tol) return a.score > b.score;
    return a.shift_hz < b.shift_hz;
  });

  std::vector<ShiftPeak> kept;
  for (const auto& c : cand) {
    if (kept.size() == max_peaks) break;
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](const ShiftPeak& k) {
      return std::abs(k.shift_hz - c.shift_hz) >= min_separation_hz;
    });
    if (clear) kept.push_back(c);
  }
  return kept;
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

CfdEstimate estimate_cfd(const GammaSlice& slice, const RakeConfig& cfg) {
  if (slice.num_frames == 0 || slice.num_shifts() == 0) throw InvalidInput("estimate_cfd: empty slice");
  const double bin = cfg.bin_hz();
  const AccumulatedEnergy acc = accumulate(slice, bin);
  const RefinedPeak peak = refine_peak(acc);

  CfdEstimate est;
  est.f_d_hz = peak.shift_hz;
  est.peak_score = peak.score;
  est.flat = peak.flat;
  est.shift_bin = acc.shift_bins[peak.index];
  est.pitch_trace_hz.resize(slice.num_frames);
  est.frame_score.resize(slice.num_frames);
  for (std::size_t t = 0; t < slice.num_frames; ++t) {
    est.pitch_trace_hz[t] = slice.pitch(t, peak.index) * bin;
    est.frame_score[t] = slice.gamma(t, peak.index);
  }
  est.pitch_variance_hz2 = sample_variance(est.pitch_trace_hz);
  est.is_speech = est.pitch_variance_hz2 >= cfg.variance_threshold_hz2;

  auto peaks = find_peaks(acc, cfg.max_peaks + 1, cfg.peak_min_separation_hz);
  for (const auto& p : peaks) {
    if (est.secondary_peaks.size() + 1 >= cfg.max_peaks) break;
    if (std::abs(p.shift_hz - est.f_d_hz) < cfg.peak_min_separation_hz) continue;
    est.secondary_peaks.push_back(p);
  }
  return est;
}

std::vector<double> smooth_pitch_trace(const std::vector<double>& trace, const std::vector<double>& voiced_energy,
                                       double q_over_r) {
  const std::size_t T = trace.size();
  if (T == 0) return {};
  if (voiced_energy.size() != T) throw InvalidInput("smooth_pitch_trace: energy and trace differ in length");
  if (!(q_over_r > 0.0)) throw InvalidInput("smooth_pitch_trace: q_over_r must be positive");

  double emax = 0.0;
  for (double e : voiced_energy) emax = std::max(emax, e);
  std::vector<double> r(T, 1.0);
  if (emax > 0.0)
    for (std::size_t t = 0; t < T; ++t) r[t] = 1.0 / std::max(std::max(voiced_energy[t], 0.0) / emax, 1e-3);

  using Vec = std::array<double, 2>;
  using Mat = std::array<double, 4>;  // row-major 2x2
  const double q = q_over_r;
  const Mat Q{q / 3.0, q / 2.0, q / 2.0, q};

  std::vector<Vec> xf(T), xp(T);
  std::vector<Mat> Pf(T), Pp(T);
  Vec x{trace[0], 0.0};
  Mat P{1e6, 0.0, 0.0, 1e6};
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) {
      // x <- F x, P <- F P F' + Q with F = [1 1; 0 1]
      x = {x[0] + x[1], x[1]};
      const Mat FP{P[0] + P[2], P[1] + P[3], P[2], P[3]};
      P = {FP[0] + FP[1] + Q[0], FP[1] + Q[1], FP[2] + FP[3] + Q[2], FP[3] + Q[3]};
    }
    xp[t] = x;
    Pp[t] = P;
    const double s = P[0] + r[t];
    const double k0 = P[0] / s, k1 = P[2] / s;
    const double innov = trace[t] - x[0];
    x = {x[0] + k0 * innov, x[1] + k1 * innov};
    P = {(1 - k0) * P[0], (1 - k0) * P[1], P[2] - k1 * P[0], P[3] - k1 * P[1]};
    xf[t] = x;
    Pf[t] = P;
  }

  std::vector<double> out(T);
  Vec xs = xf[T - 1];
  out[T - 1] = xs[0];
  for (std::size_t t = T - 1; t-- > 0;) {
    // G = Pf F' inv(Pp[t+1])
    const Mat& A = Pf[t];
    const Mat PFt{A[0] + A[1], A[1], A[2] + A[3], A[3]};
    const Mat& B = Pp[t + 1];
    const double det = B[0] * B[3] - B[1] * B[2];
    const Mat Binv{B[3] / det, -B[1] / det, -B[2] / det, B[0] / det};
    const Mat G{PFt[0] * Binv[0] + PFt[1] * Binv[2], PFt[0] * Binv[1] + PFt[1] * Binv[3],
                PFt[2] * Binv[0] + PFt[3] * Binv[2], PFt[2] * Binv[1] + PFt[3] * Binv[3]};
    const Vec dx{xs[0] - xp[t + 1][0], xs[1] - xp[t + 1][1]};
    xs = {xf[t][0] + G[0] * dx[0] + G[1] * dx[1], xf[t][1] + G[2] * dx[0] + G[3] * dx[1]};
    out[t] = xs[0];
  }
  return out;
}

}  // namespace cfd
