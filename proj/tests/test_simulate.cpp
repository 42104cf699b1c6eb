#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cfd/simulate.hpp"
#include "cfd/spectral.hpp"
#include "support.hpp"

using namespace cfd;

namespace {

// Frame-averaged power spectrum (linear), FFT 4096 Hann.
std::vector<double> mean_power(const AudioSegment& seg) {
  RakeConfig cfg;
  const auto spec = stft_log_psd(seg, cfg);
  std::vector<double> out(spec.num_bins, 0.0);
  for (std::size_t t = 0; t < spec.num_frames; ++t)
    for (std::size_t f = 0; f < spec.num_bins; ++f) out[f] += std::exp(spec.at(t, f));
  return out;
}

std::size_t nearest_bin(double hz) { return static_cast<std::size_t>(std::lround(hz / (8000.0 / 4096))); }

bool is_local_peak(const std::vector<double>& p, std::size_t k, std::size_t radius) {
  for (std::size_t i = k - radius; i <= k + radius; ++i)
    if (p[i] > p[k]) return false;
  return true;
}

double energy(const AudioSegment& s) {
  double e = 0.0;
  for (double v : s.samples) e += v * v;
  return e;
}

}  // namespace

TEST_CASE("single harmonic is a pure cosine") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 100.0}};
  v.num_harmonics = 1;
  v.duration_s = 1.0;
  const auto seg = synth_voice(v);
  REQUIRE(seg.samples.size() == 8000);
  for (std::size_t i = 0; i < seg.samples.size(); ++i)
    REQUIRE(seg.samples[i] == doctest::Approx(0.9 * std::cos(2.0 * std::numbers::pi * 100.0 * i / 8000.0)).epsilon(1e-9));
  const auto p = mean_power(seg);
  CHECK(testing::argmax(p.data(), p.size()) == nearest_bin(100.0));
}

TEST_CASE("five harmonics peak at multiples of the pitch") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 100.0}};
  v.num_harmonics = 5;
  const auto p = mean_power(synth_voice(v));
  for (int h = 1; h <= 5; ++h) CHECK(is_local_peak(p, nearest_bin(100.0 * h), 20));
}

TEST_CASE("chirp frequency from zero crossings follows the contour") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 100.0}, {1.0, 200.0}};
  v.num_harmonics = 1;
  v.duration_s = 1.0;
  const auto seg = synth_voice(v);
  std::vector<double> crossings;
  for (std::size_t i = 1; i < seg.samples.size(); ++i) {
    const double a = seg.samples[i - 1], b = seg.samples[i];
    if ((a < 0) != (b < 0)) crossings.push_back((static_cast<double>(i - 1) + a / (a - b)) / 8000.0);
  }
  REQUIRE(crossings.size() > 100);
  double worst = 0.0;
  for (std::size_t k = 1; k < crossings.size(); ++k) {
    const double mid = 0.5 * (crossings[k] + crossings[k - 1]);
    const double f = 0.5 / (crossings[k] - crossings[k - 1]);
    worst = std::max(worst, std::abs(f - v.pitch_at(mid)));
  }
  CHECK(worst < 1.0);
}

TEST_CASE("voiced mask silences the gaps") {
  VoiceSpec v;
  v.duration_s = 1.0;
  v.voiced = {{0.1, 0.4}, {0.6, 0.9}};
  const auto seg = synth_voice(v);
  CHECK(seg.samples[400] == 0.0);
  CHECK(seg.samples[4000] == 0.0);
  CHECK(seg.samples[7500] == 0.0);
  double peak = 0.0;
  for (double x : seg.samples) peak = std::max(peak, std::abs(x));
  CHECK(peak == doctest::Approx(0.9));
  CHECK(v.voiced_at(0.2));
  CHECK_FALSE(v.voiced_at(0.5));
  // frame centres at 0.128 s, 0.528 s and 0.928 s
  const auto truth = true_pitch_trace(v, 2048, 3200, 3);
  CHECK(truth[0] == 150.0);
  CHECK(std::isnan(truth[1]));
  CHECK(std::isnan(truth[2]));
}

TEST_CASE("voice validation") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 40.0}};
  CHECK_THROWS_AS(synth_voice(v), InvalidInput);
  v.breakpoints = {{0.0, 390.0}};
  v.vibrato_depth_hz = 20.0;
  CHECK_THROWS_AS(synth_voice(v), InvalidInput);
  v = {};
  v.breakpoints = {{0.0, 300.0}};
  v.num_harmonics = 14;
  CHECK_THROWS_AS(synth_voice(v), InvalidInput);
  v = {};
  v.duration_s = 0.0;
  CHECK_THROWS_AS(synth_voice(v), InvalidInput);
}

TEST_CASE("identity channel reproduces the band-limited input") {
  std::mt19937_64 rng(1);
  const auto seg = synth_voice(random_voice(rng, 2.0));
  ChannelSpec ch;
  const auto out = apply_channel(seg, ch, 5);
  const auto ref = band_limit(seg, ch.bandwidth_hz);
  double err = 0.0;
  for (std::size_t i = 0; i < out.samples.size(); ++i) err += std::pow(out.samples[i] - ref.samples[i], 2);
  CHECK(std::sqrt(err / static_cast<double>(out.samples.size())) < 1e-6);
}

TEST_CASE("in-band energy survives the identity channel") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 120.0}, {2.0, 160.0}};
  v.duration_s = 2.0;
  v.num_harmonics = 20;  // all below 2600 Hz
  const auto seg = synth_voice(v);
  const auto out = apply_channel(seg, ChannelSpec{}, 1);
  CHECK(energy(out) == doctest::Approx(energy(seg)).epsilon(0.01));
}

TEST_CASE("band limit removes content above the cutoff") {
  const auto seg = testing::tone(3300.0, 1.0, 0.5);
  const auto out = band_limit(seg, 2700.0);
  // away from the onset and end transients
  double mid = 0.0;
  for (std::size_t i = 1000; i < 7000; ++i) mid += out.samples[i] * out.samples[i];
  CHECK(mid < 1e-7 * energy(seg));
  const auto h = design_lowpass(2700.0, 200.0, 8000);
  CHECK(h.size() % 2 == 1);
  for (std::size_t k = 0; k < h.size(); ++k) CHECK(h[k] == doctest::Approx(h[h.size() - 1 - k]));
}

TEST_CASE("a tone moves up by the carrier difference") {
  ChannelSpec ch;
  ch.cfd_hz = 500.0;
  const auto p = mean_power(apply_channel(testing::tone(100.0, 1.0, 0.5), ch, 1));
  CHECK(testing::argmax(p.data(), p.size()) == nearest_bin(600.0));
}

TEST_CASE("tones land within one bin of f + cfd") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const double f = testing::uniform(rng, 80.0, 2500.0);
    ChannelSpec ch;
    ch.cfd_hz = testing::uniform(rng, 0.0, 1000.0);
    const auto p = mean_power(apply_channel(testing::tone(f, 1.0, 0.5), ch, 1));
    const double at = static_cast<double>(testing::argmax(p.data(), p.size())) * 8000.0 / 4096;
    CHECK(std::abs(at - (f + ch.cfd_hz)) <= 8000.0 / 4096);
  }
}

TEST_CASE("shifted five-harmonic voice peaks at the shifted harmonics") {
  VoiceSpec v;
  v.breakpoints = {{0.0, 150.0}};
  v.num_harmonics = 5;
  ChannelSpec ch;
  ch.cfd_hz = 300.0;
  const auto p = mean_power(apply_channel(synth_voice(v), ch, 1));
  for (double f : {450.0, 600.0, 750.0, 900.0, 1050.0}) CHECK(is_local_peak(p, nearest_bin(f), 30));
  CHECK(p[nearest_bin(150.0)] < 1e-6 * p[nearest_bin(450.0)]);
}

TEST_CASE("noise is reproducible and scaled to the SNR") {
  const auto seg = testing::tone(440.0, 2.0, 0.5);
  ChannelSpec ch;
  ch.snr_db = 10.0;
  const auto a = apply_channel(seg, ch, 42);
  const auto b = apply_channel(seg, ch, 42);
  const auto c = apply_channel(seg, ch, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  ch.snr_db = std::numeric_limits<double>::infinity();
  const auto clean = apply_channel(seg, ch, 42);
  double noise = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) noise += std::pow(a.samples[i] - clean.samples[i], 2);
  CHECK(10.0 * std::log10(energy(clean) / noise) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("channel validation") {
  const auto seg = testing::tone(440.0, 0.5);
  ChannelSpec ch;
  ch.cfd_hz = 3600.0;
  CHECK_THROWS_AS(apply_channel(seg, ch, 1), InvalidInput);
  ch = {};
  ch.cfd_hz = -1.0;
  CHECK_THROWS_AS(apply_channel(seg, ch, 1), InvalidInput);
  ch = {};
  ch.bandwidth_hz = 4500.0;
  CHECK_THROWS_AS(apply_channel(seg, ch, 1), InvalidInput);
  ch = {};
  auto other = seg;
  other.sample_rate = 16000;
  CHECK_THROWS_AS(apply_channel(other, ch, 1), InvalidInput);
}

TEST_CASE("random voices are valid and moving") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto v = random_voice(rng, 12.0);
    CHECK_NOTHROW(v.validate());
    std::vector<double> p;
    for (double t = 0; t < 12.0; t += 0.02) p.push_back(v.pitch_at(t));
    double mean = 0, var = 0;
    for (double x : p) mean += x;
    mean /= static_cast<double>(p.size());
    for (double x : p) var += (x - mean) * (x - mean);
    CHECK(std::sqrt(var / static_cast<double>(p.size())) >= 10.0);
  }
}

TEST_CASE("manifest lines round-trip") {
  std::mt19937_64 rng(4);
  ManifestRecord rec;
  rec.path = "dir/sim_0001.wav";
  rec.cfd_hz = 300.0;
  rec.snr_db = 10.0;
  rec.duration_s = 12.0;
  rec.seed = 1234567890123ULL;
  rec.voice = random_voice(rng, 12.0);
  const auto back = parse_manifest_line(to_manifest_line(rec));
  CHECK(back.path == rec.path);
  CHECK(back.cfd_hz == rec.cfd_hz);
  CHECK(back.snr_db == rec.snr_db);
  CHECK(back.seed == rec.seed);
  REQUIRE(back.voice.breakpoints.size() == rec.voice.breakpoints.size());
  for (std::size_t i = 0; i < rec.voice.breakpoints.size(); ++i) {
    CHECK(back.voice.breakpoints[i].t_s == rec.voice.breakpoints[i].t_s);
    CHECK(back.voice.breakpoints[i].hz == rec.voice.breakpoints[i].hz);
  }
  CHECK(back.voice.voiced.size() == rec.voice.voiced.size());
  CHECK(synth_voice(back.voice).samples == synth_voice(rec.voice).samples);

  rec.snr_db = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(parse_manifest_line(to_manifest_line(rec)).snr_db));
  CHECK_THROWS_AS(parse_manifest_line("{not json"), InvalidInput);
  CHECK_THROWS_AS(parse_manifest_line("{\"path\": \"x\"}"), InvalidInput);
}
