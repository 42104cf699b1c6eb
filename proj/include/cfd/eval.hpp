#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cfd/config.hpp"
#include "cfd/rake.hpp"
#include "cfd/spectral.hpp"

namespace cfd {

/// Absolute-error classes [0,5), [5,10), [10,50), [50,100), [100,inf) Hz,
/// stratified by segment length [0,0.5), [0.5,1), [1,2), [2,10), [10,inf) s.
struct ErrorClassHistogram {
  static constexpr std::size_t kClasses = 5;
  static constexpr std::size_t kBuckets = 5;
  static constexpr std::array<double, kClasses> class_lower_hz{0.0, 5.0, 10.0, 50.0, 100.0};
  static constexpr std::array<double, kBuckets> bucket_lower_s{0.0, 0.5, 1.0, 2.0, 10.0};

  std::array<std::array<std::size_t, kClasses>, kBuckets> counts{};

  static std::size_t class_of(double abs_error_hz);
  static std::size_t bucket_of(double length_s);
  static std::string class_label(std::size_t c);
  static std::string bucket_label(std::size_t b);

  std::size_t bucket_total(std::size_t b) const;
  std::size_t total() const;
  /// Class shares of bucket b in percent (all zero for an empty bucket).
  std::array<double, kClasses> percentages(std::size_t b) const;

  /// bucket,class,count,percent
  std::string to_csv() const;
  /// One row per bucket, one column per class percentage.
  std::string to_gnuplot() const;
};

ErrorClassHistogram classify_errors(const std::vector<double>& estimates, const std::vector<double>& truths,
                                    const std::vector<double>& lengths_s);

/// Sorted per-frame errors; value(i) is reached by fraction (i + 1) / n.
struct ErrorCdf {
  std::vector<double> errors_hz;

  std::size_t size() const { return errors_hz.size(); }
  double fraction(std::size_t i) const { return static_cast<double>(i + 1) / static_cast<double>(errors_hz.size()); }
  /// Empirical CDF evaluated at x: share of errors <= x.
  double at(double x) const;
  /// Lower empirical quantile, q in [0, 1].
  double quantile(double q) const;
  double median() const { return quantile(0.5); }

  /// error_hz,fraction
  std::string to_csv() const;
  std::string to_gnuplot() const;
};

/// Frames where the truth is NaN (unvoiced) are skipped. With the octave
/// oracle the error is min over est * {0.5, 1, 2}.
ErrorCdf pitch_error_cdf(const std::vector<std::vector<double>>& est_traces,
                         const std::vector<std::vector<double>>& true_traces, bool oracle_octave);

enum class BenchEngine { direct, pc_single, pc_multi };

BenchEngine parse_bench_engine(const std::string& name);
std::string bench_engine_name(BenchEngine e);

struct BenchResult {
  BenchEngine engine = BenchEngine::direct;
  std::size_t fft_size = 0;
  unsigned threads = 1;
  double audio_s = 0.0;
  double seconds = 0.0;  // best of the repeats
  double rtf = 0.0;
};

/// Times spectrogram, correlation and estimation on `audio`, keeping the
/// fastest of `repeats` runs. Benchmarks are serialised process-wide.
BenchResult benchmark_rtf(BenchEngine engine, std::size_t fft_size, const AudioSegment& audio,
                          const RakeConfig& base = {}, unsigned repeats = 1, unsigned multi_threads = 0);

/// engine,fft_size,threads,audio_s,seconds,rtf
std::string bench_to_csv(const std::vector<BenchResult>& results);

}  // namespace cfd
