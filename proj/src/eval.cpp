#include "cfd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>

#include "cfd/parallel.hpp"
#include "cfd/pipeline.hpp"

namespace cfd {
namespace {

template <std::size_t N>
std::size_t lower_index(const std::array<double, N>& lower, double v) {
  std::size_t i = 0;
  while (i + 1 < N && v >= lower[i + 1]) ++i;
  return i;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::mutex& bench_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t ErrorClassHistogram::class_of(double abs_error_hz) {
  if (!(abs_error_hz >= 0.0)) throw InvalidInput("error class: error must be a non-negative number");
  return lower_index(class_lower_hz, abs_error_hz);
}

std::size_t ErrorClassHistogram::bucket_of(double length_s) {
  if (!(length_s >= 0.0)) throw InvalidInput("length bucket: length must be a non-negative number");
  return lower_index(bucket_lower_s, length_s);
}

std::string ErrorClassHistogram::class_label(std::size_t c) {
  static const char* names[kClasses] = {"<5Hz", "5-10Hz", "10-50Hz", "50-100Hz", ">100Hz"};
  return names[c];
}

std::string ErrorClassHistogram::bucket_label(std::size_t b) {
  static const char* names[kBuckets] = {"<0.5s", "0.5-1s", "1-2s", "2-10s", ">10s"};
  return names[b];
}

std::size_t ErrorClassHistogram::bucket_total(std::size_t b) const {
  std::size_t n = 0;
  for (auto c : counts[b]) n += c;
  return n;
}

std::size_t ErrorClassHistogram::total() const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < kBuckets; ++b) n += bucket_total(b);
  return n;
}

std::array<double, ErrorClassHistogram::kClasses> ErrorClassHistogram::percentages(std::size_t b) const {
  std::array<double, kClasses> out{};
  const std::size_t n = bucket_total(b);
  if (n == 0) return out;
  for (std::size_t c = 0; c < kClasses; ++c) out[c] = 100.0 * static_cast<double>(counts[b][c]) / static_cast<double>(n);
  return out;
}

std::string ErrorClassHistogram::to_csv() const {
  std::string out = "bucket,class,count,percent\n";
  for (std::size_t b = 0; b < kBuckets; ++b) {
    const auto pct = percentages(b);
    for (std::size_t c = 0; c < kClasses; ++c)
      out += bucket_label(b) + "," + class_label(c) + "," + std::to_string(counts[b][c]) + "," + fmt(pct[c]) + "\n";
  }
  return out;
}

std::string ErrorClassHistogram::to_gnuplot() const {
  std::string out = "# bucket";
  for (std::size_t c = 0; c < kClasses; ++c) out += " " + class_label(c);
  out += "\n";
  for (std::size_t b = 0; b < kBuckets; ++b) {
    out += "\"" + bucket_label(b) + "\"";
    for (double p : percentages(b)) out += " " + fmt(p);
    out += "\n";
  }
  return out;
}

ErrorClassHistogram classify_errors(const std::vector<double>& estimates, const std::vector<double>& truths,
                                    const std::vector<double>& lengths_s) {
  if (estimates.size() != truths.size() || estimates.size() != lengths_s.size())
    throw InvalidInput("classify_errors: estimates, truths and lengths differ in size");
  ErrorClassHistogram h;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    ++h.counts[ErrorClassHistogram::bucket_of(lengths_s[i])]
              [ErrorClassHistogram::class_of(std::abs(estimates[i] - truths[i]))];
  return h;
}

double ErrorCdf::at(double x) const {
  const auto it = std::upper_bound(errors_hz.begin(), errors_hz.end(), x);
  return static_cast<double>(it - errors_hz.begin()) / static_cast<double>(errors_hz.size());
}

double ErrorCdf::quantile(double q) const {
  if (errors_hz.empty()) throw InvalidInput("quantile of an empty CDF");
  q = std::clamp(q, 0.0, 1.0);
  const auto n = static_cast<double>(errors_hz.size());
  const auto i = static_cast<std::size_t>(std::max(0.0, std::ceil(q * n) - 1.0));
  return errors_hz[std::min(i, errors_hz.size() - 1)];
}

std::string ErrorCdf::to_csv() const {
  std::string out = "error_hz,fraction\n";
  for (std::size_t i = 0; i < size(); ++i) out += fmt(errors_hz[i]) + "," + fmt(fraction(i)) + "\n";
  return out;
}

std::string ErrorCdf::to_gnuplot() const {
  std::string out = "# error_hz fraction\n";
  for (std::size_t i = 0; i < size(); ++i) out += fmt(errors_hz[i]) + " " + fmt(fraction(i)) + "\n";
  return out;
}

ErrorCdf pitch_error_cdf(const std::vector<std::vector<double>>& est_traces,
                         const std::vector<std::vector<double>>& true_traces, bool oracle_octave) {
  if (est_traces.size() != true_traces.size()) throw InvalidInput("pitch_error_cdf: trace counts differ");
  ErrorCdf cdf;
  for (std::size_t k = 0; k < est_traces.size(); ++k) {
    const auto& est = est_traces[k];
    const auto& ref = true_traces[k];
    if (est.size() != ref.size()) throw InvalidInput("pitch_error_cdf: trace " + std::to_string(k) + " misaligned");
    for (std::size_t t = 0; t < est.size(); ++t) {
      if (std::isnan(ref[t])) continue;
      double e = std::abs(est[t] - ref[t]);
      if (oracle_octave) e = std::min({e, std::abs(0.5 * est[t] - ref[t]), std::abs(2.0 * est[t] - ref[t])});
      cdf.errors_hz.push_back(e);
    }
  }
  if (cdf.errors_hz.empty()) throw InvalidInput("pitch_error_cdf: no voiced frames");
  std::sort(cdf.errors_hz.begin(), cdf.errors_hz.end());
  return cdf;
}

BenchEngine parse_bench_engine(const std::string& name) {
  if (name == "direct") return BenchEngine::direct;
  if (name == "pc-single") return BenchEngine::pc_single;
  if (name == "pc-multi") return BenchEngine::pc_multi;
  throw InvalidInput("unknown benchmark engine '" + name + "' (expected direct, pc-single or pc-multi)");
}

std::string bench_engine_name(BenchEngine e) {
  switch (e) {
    case BenchEngine::direct: return "direct";
    case BenchEngine::pc_single: return "pc-single";
    case BenchEngine::pc_multi: return "pc-multi";
  }
  return "?";
}

BenchResult benchmark_rtf(BenchEngine engine, std::size_t fft_size, const AudioSegment& audio, const RakeConfig& base,
                          unsigned repeats, unsigned multi_threads) {
  if (audio.duration_s() < 10.0) throw InvalidInput("benchmark_rtf: audio must be at least 10 s long");
  RakeConfig cfg = base;
  cfg.fft_size = fft_size;
  cfg.validate();
  AnalysisOptions opt;
  opt.engine = engine == BenchEngine::direct ? Engine::direct : Engine::pc;
  opt.threads = engine == BenchEngine::pc_multi ? resolve_threads(multi_threads) : 1;

  const std::lock_guard<std::mutex> lock(bench_mutex());
  BenchResult r;
  r.engine = engine;
  r.fft_size = fft_size;
  r.threads = opt.threads;
  r.audio_s = audio.duration_s();
  r.seconds = std::numeric_limits<double>::infinity();
  for (unsigned i = 0; i < std::max(1u, repeats); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const CfdEstimate est = analyse(audio, cfg, opt);
    const auto t1 = std::chrono::steady_clock::now();
    (void)est;
    r.seconds = std::min(r.seconds, std::chrono::duration<double>(t1 - t0).count());
  }
  r.rtf = r.seconds / r.audio_s;
  return r;
}

std::string bench_to_csv(const std::vector<BenchResult>& results) {
  std::string out = "engine,fft_size,threads,audio_s,seconds,rtf\n";
  for (const auto& r : results)
    out += bench_engine_name(r.engine) + "," + std::to_string(r.fft_size) + "," + std::to_string(r.threads) + "," +
           fmt(r.audio_s) + "," + fmt(r.seconds) + "," + fmt(r.rtf) + "\n";
  return out;
}

}  // namespace cfd
