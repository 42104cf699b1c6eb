#include "cfd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "cfd/config.hpp"
#include "cfd/fft.hpp"

namespace cfd {
namespace {

constexpr double kPeak = 0.9;
constexpr double kEdgeS = 0.005;
constexpr double kPitchLo = 50.0;
constexpr double kPitchHi = 400.0;
// The shifted band must keep at least this much below Nyquist.
constexpr double kMinRemainingHz = 500.0;

double contour_at(const std::vector<PitchPoint>& bp, double t) {
  if (t <= bp.front().t_s) return bp.front().hz;
  if (t >= bp.back().t_s) return bp.back().hz;
  const auto it = std::upper_bound(bp.begin(), bp.end(), t, [](double v, const PitchPoint& p) { return v < p.t_s; });
  const PitchPoint& b = *it;
  const PitchPoint& a = *(it - 1);
  const double u = (t - a.t_s) / (b.t_s - a.t_s);
  return a.hz + u * (b.hz - a.hz);
}

// Gain in [0, 1] for the voiced mask with raised-cosine edges inside each interval.
double mask_gain(const VoiceSpec& spec, double t) {
  if (spec.voiced.empty()) return 1.0;
  for (const auto& iv : spec.voiced) {
    if (t < iv.start_s || t >= iv.end_s) continue;
    const double edge = std::min(kEdgeS, 0.5 * (iv.end_s - iv.start_s));
    const double dist = std::min(t - iv.start_s, iv.end_s - t);
    if (dist >= edge) return 1.0;
    return 0.5 - 0.5 * std::cos(std::numbers::pi * dist / edge);
  }
  return 0.0;
}

}  // namespace

double VoiceSpec::pitch_at(double t) const {
  double f = contour_at(breakpoints, t);
  if (vibrato_depth_hz != 0.0) f += vibrato_depth_hz * std::sin(2.0 * std::numbers::pi * vibrato_rate_hz * t);
  return f;
}

bool VoiceSpec::voiced_at(double t) const {
  if (t < 0.0 || t >= duration_s) return false;
  if (voiced.empty()) return true;
  return std::any_of(voiced.begin(), voiced.end(), [t](const Interval& iv) { return t >= iv.start_s && t < iv.end_s; });
}

void VoiceSpec::validate() const {
  if (!(duration_s > 0.0)) throw InvalidInput("voice: duration_s must be positive");
  if (sample_rate <= 0) throw InvalidInput("voice: sample_rate must be positive");
  if (num_harmonics < 1) throw InvalidInput("voice: num_harmonics must be >= 1");
  if (breakpoints.empty()) throw InvalidInput("voice: pitch contour needs at least one breakpoint");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i].t_s > breakpoints[i - 1].t_s)) throw InvalidInput("voice: breakpoint times must increase");
  if (vibrato_depth_hz < 0.0 || vibrato_rate_hz < 0.0) throw InvalidInput("voice: vibrato must be non-negative");
  double lo = breakpoints.front().hz, hi = lo;
  for (const auto& p : breakpoints) {
    lo = std::min(lo, p.hz);
    hi = std::max(hi, p.hz);
  }
  lo -= vibrato_depth_hz;
  hi += vibrato_depth_hz;
  if (lo < kPitchLo || hi > kPitchHi) throw InvalidInput("voice: pitch contour leaves [50, 400] Hz");
  if (hi * num_harmonics >= sample_rate / 2.0)
    throw InvalidInput("voice: highest harmonic (" + std::to_string(hi * num_harmonics) + " Hz) reaches Nyquist");
  for (const auto& iv : voiced)
    if (!(iv.end_s > iv.start_s)) throw InvalidInput("voice: empty voiced interval");
}

AudioSegment synth_voice(const VoiceSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  AudioSegment out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(n, 0.0);
  std::vector<double> amp(spec.num_harmonics);
  for (int h = 1; h <= spec.num_harmonics; ++h) amp[h - 1] = std::pow(static_cast<double>(h), -spec.harmonic_rolloff);

  const double dt = 1.0 / spec.sample_rate;
  double phase = 0.0;
  double f_prev = spec.pitch_at(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double f = spec.pitch_at(t);
    if (i > 0) phase = std::fmod(phase + std::numbers::pi * (f_prev + f) * dt, 2.0 * std::numbers::pi);
    f_prev = f;
    const double g = mask_gain(spec, t);
    if (g == 0.0) continue;
    double v = 0.0;
    for (int h = 1; h <= spec.num_harmonics; ++h) v += amp[h - 1] * std::cos(h * phase);
    out.samples[i] = g * v;
  }
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out.samples) v *= kPeak / peak;
  return out;
}

std::vector<double> true_pitch_trace(const VoiceSpec& spec, std::size_t fft_size, std::size_t hop,
                                     std::size_t num_frames) {
  std::vector<double> out(num_frames);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const double centre = (static_cast<double>(t * hop) + 0.5 * static_cast<double>(fft_size)) / spec.sample_rate;
    out[t] = spec.voiced_at(centre) ? spec.pitch_at(centre) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

void ChannelSpec::validate() const {
  if (sample_rate <= 0) throw InvalidInput("channel: sample_rate must be positive");
  if (cfd_hz < 0.0) throw InvalidInput("channel: cfd_hz must be >= 0");
  if (!(bandwidth_hz > 0.0) || bandwidth_hz >= sample_rate / 2.0)
    throw InvalidInput("channel: bandwidth_hz must lie in (0, Nyquist)");
  if (cfd_hz + kMinRemainingHz > sample_rate / 2.0)
    throw InvalidInput("channel: cfd_hz " + std::to_string(cfd_hz) + " Hz leaves less than " +
                       std::to_string(static_cast<int>(kMinRemainingHz)) + " Hz of the band below Nyquist");
  if (std::isnan(snr_db)) throw InvalidInput("channel: snr_db is NaN");
}

std::vector<double> design_lowpass(double cutoff_hz, double transition_hz, int sample_rate) {
  const double atten_db = 80.0;
  const double beta = 0.1102 * (atten_db - 8.7);
  const double dw = 2.0 * std::numbers::pi * transition_hz / sample_rate;
  auto taps = static_cast<std::size_t>(std::ceil((atten_db - 8.0) / (2.285 * dw))) + 1;
  if (taps % 2 == 0) ++taps;
  const double fc = cutoff_hz / sample_rate;
  const double mid = 0.5 * static_cast<double>(taps - 1);
  const double i0b = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(taps);
  for (std::size_t k = 0; k < taps; ++k) {
    const double m = static_cast<double>(k) - mid;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double r = m / mid;
    h[k] = sinc * std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
  }
  return h;
}

AudioSegment band_limit(const AudioSegment& seg, double bandwidth_hz) {
  const auto h = design_lowpass(bandwidth_hz, 200.0, seg.sample_rate);
  const auto delay = static_cast<std::ptrdiff_t>(h.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(seg.samples.size());
  const auto taps = static_cast<std::ptrdiff_t>(h.size());
  AudioSegment out;
  out.sample_rate = seg.sample_rate;
  out.samples.assign(seg.samples.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    // y[i] = sum_k h[k] x[i + delay - k]
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + delay - (n - 1));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(taps - 1, i + delay);
    double acc = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) acc += h[k] * seg.samples[i + delay - k];
    out.samples[i] = acc;
  }
  return out;
}

AudioSegment apply_channel(const AudioSegment& seg, const ChannelSpec& ch, std::uint64_t seed) {
  ch.validate();
  if (seg.sample_rate != ch.sample_rate)
    throw InvalidInput("channel: segment sample rate " + std::to_string(seg.sample_rate) + " Hz differs from channel " +
                       std::to_string(ch.sample_rate) + " Hz");
  AudioSegment out = band_limit(seg, ch.bandwidth_hz);
  const std::size_t n = out.samples.size();
  if (n == 0) return out;

  // analytic signal; bins that the shift would push past Nyquist are dropped
  ComplexFft fft(n);
  AlignedBuffer<Complex> buf(n), spec(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = out.samples[i];
  fft.forward(buf.data(), spec.data());
  const double fs = ch.sample_rate;
  const double nyq = fs / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    double g = 0.0;
    if (k == 0 || (2 * k == n)) g = 1.0;
    else if (2 * k < n) g = 2.0;
    if (f + ch.cfd_hz > nyq) g = 0.0;
    spec[k] *= g / static_cast<double>(n);
  }
  fft.inverse(spec.data(), buf.data());
  const double w = 2.0 * std::numbers::pi * ch.cfd_hz / fs;
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = w * static_cast<double>(i);
    out.samples[i] = buf[i].real() * std::cos(ph) - buf[i].imag() * std::sin(ph);
  }
  add_noise(out, ch.snr_db, seed);
  return out;
}

void add_noise(AudioSegment& seg, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  if (seg.samples.empty()) return;
  double power = 0.0;
  for (double v : seg.samples) power += v * v;
  power /= static_cast<double>(seg.samples.size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : seg.samples) v += noise(rng);
}

AudioSegment mix(const AudioSegment& a, const AudioSegment& b, double gain_b) {
  if (a.sample_rate != b.sample_rate) throw InvalidInput("mix: sample rates differ");
  AudioSegment out;
  out.sample_rate = a.sample_rate;
  out.samples.assign(std::max(a.samples.size(), b.samples.size()), 0.0);
  for (std::size_t i = 0; i < a.samples.size(); ++i) out.samples[i] += a.samples[i];
  for (std::size_t i = 0; i < b.samples.size(); ++i) out.samples[i] += gain_b * b.samples[i];
  return out;
}

VoiceSpec random_voice(std::mt19937_64& rng, double duration_s, double lo_hz, double hi_hz) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VoiceSpec v;
  v.duration_s = duration_s;
  v.vibrato_rate_hz = 4.0 + 3.0 * u(rng);
  v.vibrato_depth_hz = 3.0 + 5.0 * u(rng);
  const double lo = lo_hz + v.vibrato_depth_hz;
  const double hi = hi_hz - v.vibrato_depth_hz;
  v.breakpoints.clear();
  // alternate between the lower and upper half so every voice sweeps the range
  bool upper = u(rng) < 0.5;
  const double mid = 0.5 * (lo + hi);
  for (double t = 0.0;; t += 0.3 + 0.4 * u(rng)) {
    const double a = upper ? mid : lo;
    const double b = upper ? hi : mid;
    v.breakpoints.push_back({t, a + (b - a) * u(rng)});
    upper = !upper;
    if (t >= duration_s) break;
  }
  v.num_harmonics = std::min(20, static_cast<int>(std::floor((v.sample_rate / 2.0 - 1.0) / hi_hz)));
  v.harmonic_rolloff = 0.7 + 0.6 * u(rng);
  if (duration_s >= 2.0) {
    for (double t = 0.0; t < duration_s;) {
      const double len = 1.5 + 1.5 * u(rng);
      const double end = std::min(duration_s, t + len);
      v.voiced.push_back({t, end});
      t = end + 0.1 + 0.2 * u(rng);
    }
  }
  return v;
}

namespace {

nlohmann::json voice_to_json(const VoiceSpec& v) {
  nlohmann::json bp = nlohmann::json::array();
  for (const auto& p : v.breakpoints) bp.push_back({p.t_s, p.hz});
  nlohmann::json voiced = nlohmann::json::array();
  for (const auto& iv : v.voiced) voiced.push_back({iv.start_s, iv.end_s});
  return {{"breakpoints", bp},
          {"vibrato_rate_hz", v.vibrato_rate_hz},
          {"vibrato_depth_hz", v.vibrato_depth_hz},
          {"harmonic_rolloff", v.harmonic_rolloff},
          {"num_harmonics", v.num_harmonics},
          {"voiced", voiced}};
}

}  // namespace

std::string to_manifest_line(const ManifestRecord& rec) {
  nlohmann::json j = voice_to_json(rec.voice);
  j["path"] = rec.path;
  j["cfd_hz"] = rec.cfd_hz;
  j["snr_db"] = std::isinf(rec.snr_db) ? nlohmann::json(nullptr) : nlohmann::json(rec.snr_db);
  j["duration_s"] = rec.duration_s;
  j["seed"] = rec.seed;
  return j.dump();
}

ManifestRecord parse_manifest_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("manifest: ") + e.what());
  }
  try {
    ManifestRecord rec;
    rec.path = j.at("path").get<std::string>();
    rec.cfd_hz = j.at("cfd_hz").get<double>();
    rec.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity() : j.at("snr_db").get<double>();
    rec.duration_s = j.at("duration_s").get<double>();
    rec.seed = j.value("seed", std::uint64_t{0});
    auto& v = rec.voice;
    v.duration_s = rec.duration_s;
    v.breakpoints.clear();
    for (const auto& p : j.at("breakpoints")) v.breakpoints.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    v.vibrato_rate_hz = j.value("vibrato_rate_hz", 0.0);
    v.vibrato_depth_hz = j.value("vibrato_depth_hz", 0.0);
    v.harmonic_rolloff = j.value("harmonic_rolloff", 1.0);
    v.num_harmonics = j.value("num_harmonics", 10);
    if (j.contains("voiced"))
      for (const auto& iv : j.at("voiced")) v.voiced.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("manifest: ") + e.what());
  }
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open manifest: " + path);
  std::vector<ManifestRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(parse_manifest_line(line));
  return out;
}

}  // namespace cfd
