#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfd/estimator.hpp"
#include "cfd/pipeline.hpp"
#include "cfd/simulate.hpp"
#include "support.hpp"

using namespace cfd;

namespace {

AccumulatedEnergy curve(const std::vector<double>& y, double bin_hz, int shift_lo = 0) {
  AccumulatedEnergy acc;
  acc.bin_hz = bin_hz;
  acc.num_frames = 1;
  acc.gamma_hat = y;
  for (std::size_t d = 0; d < y.size(); ++d) acc.shift_bins.push_back(shift_lo + static_cast<int>(d));
  acc.grid = {1, 1, shift_lo, shift_lo + static_cast<int>(y.size()) - 1};
  acc.winning_pitch.assign(y.size(), 1);
  return acc;
}

GammaSlice random_slice(std::mt19937_64& rng, std::size_t T, std::size_t D) {
  GammaSlice s;
  s.grid = {10, 40, 0, static_cast<int>(D) - 1};
  s.num_frames = T;
  for (std::size_t i = 0; i < T * D; ++i) {
    s.gamma_prime.push_back(testing::uniform(rng, -5, 5));
    s.winning_pitch.push_back(testing::uniform_int(rng, 10, 40));
  }
  return s;
}

AudioSegment voice_through_channel(const VoiceSpec& v, double cfd_hz, double snr_db, std::uint64_t seed) {
  ChannelSpec ch;
  ch.cfd_hz = cfd_hz;
  ch.snr_db = snr_db;
  return apply_channel(synth_voice(v), ch, seed);
}

}  // namespace

TEST_CASE("accumulate sums columns") {
  std::mt19937_64 rng(1);
  const auto one = random_slice(rng, 1, 12);
  CHECK(accumulate(one, 2.0).gamma_hat == one.gamma_prime);

  auto twice = one;
  twice.num_frames = 2;
  twice.gamma_prime.insert(twice.gamma_prime.end(), one.gamma_prime.begin(), one.gamma_prime.end());
  twice.winning_pitch.insert(twice.winning_pitch.end(), one.winning_pitch.begin(), one.winning_pitch.end());
  const auto acc2 = accumulate(twice, 2.0);
  for (std::size_t d = 0; d < 12; ++d) CHECK(acc2.gamma_hat[d] == 2.0 * one.gamma_prime[d]);

  const auto big = random_slice(rng, 30, 50);
  const auto acc = accumulate(big, 2.0);
  for (std::size_t d = 0; d < 50; ++d) {
    double naive = 0.0;
    for (std::size_t t = 0; t < 30; ++t) naive += big.gamma_prime[t * 50 + d];
    CHECK(acc.gamma_hat[d] == doctest::Approx(naive).epsilon(1e-13));
  }
  CHECK(acc.shift_hz(7) == 14.0);
}

TEST_CASE("accumulate is invariant to frame order") {
  std::mt19937_64 rng(2);
  const auto s = random_slice(rng, 20, 30);
  auto perm = s;
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t d = 0; d < 30; ++d) perm.gamma_prime[t * 30 + d] = s.gamma_prime[order[t] * 30 + d];
  const auto a = accumulate(s, 1.0), b = accumulate(perm, 1.0);
  for (std::size_t d = 0; d < 30; ++d) CHECK(a.gamma_hat[d] == doctest::Approx(b.gamma_hat[d]).epsilon(1e-13));
}

TEST_CASE("refine_peak recovers a sampled parabola vertex") {
  const double bin = 8000.0 / 4096;
  std::vector<double> y;
  for (int d = 0; d <= 200; ++d) y.push_back(50.0 - 0.3 * (d - 100.0) * (d - 100.0));
  const auto p = refine_peak(curve(y, bin));
  CHECK(std::abs(p.shift_hz - 100.0 * bin) < 1e-6);
  CHECK_FALSE(p.flat);
}

TEST_CASE("refine_peak finds an off-grid parabola vertex") {
  const double bin = 8000.0 / 4096;
  std::vector<double> y;
  for (int d = 0; d <= 200; ++d) y.push_back(-(d - 80.3) * (d - 80.3));
  CHECK(std::abs(refine_peak(curve(y, bin)).shift_hz - 80.3 * bin) < 1e-6);
}

TEST_CASE("symmetric triangle between two bins refines to the midpoint") {
  const double bin = 8000.0 / 4096;
  std::vector<double> y;
  for (int d = 0; d <= 200; ++d) y.push_back(-std::abs(d - 99.5));
  const auto p = refine_peak(curve(y, bin));
  CHECK(p.shift_hz > 99.0 * bin);
  CHECK(p.shift_hz < 100.0 * bin);
  CHECK(std::abs(p.shift_hz - 99.5 * bin) <= 0.1);
}

TEST_CASE("flat curve reports the lowest shift") {
  const auto p = refine_peak(curve(std::vector<double>(10, 3.0), 2.0, 5));
  CHECK(p.flat);
  CHECK(p.shift_hz == 10.0);
  CHECK_THROWS_AS(refine_peak(curve(std::vector<double>(4, 1.0), 2.0)), InvalidInput);
}

TEST_CASE("refinement stays within 1.5 bins of the integer maximum") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> y(static_cast<std::size_t>(testing::uniform_int(rng, 5, 60)));
    for (auto& v : y) v = testing::uniform(rng, 0, 1);
    if (trial % 3 == 0)
      for (std::size_t i = 1; i < y.size(); i += 2) y[i] = y[i - 1];  // plateaus
    const auto acc = curve(y, 1.953125);
    const auto p = refine_peak(acc);
    CHECK(std::abs(p.shift_hz - acc.shift_hz(p.index)) <= 1.5 * acc.bin_hz + 1e-12);
    CHECK(p.score >= acc.gamma_hat[p.index]);
  }
}

TEST_CASE("find_peaks on a single bump equals refine_peak") {
  std::vector<double> y;
  for (int d = 0; d <= 100; ++d) y.push_back(-(d - 40.2) * (d - 40.2));
  const auto acc = curve(y, 2.0);
  const auto peaks = find_peaks(acc, 3, 20.0);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].shift_hz == refine_peak(acc).shift_hz);
  CHECK_THROWS_AS(find_peaks(acc, 0, 1.0), InvalidInput);
}

TEST_CASE("find_peaks returns two equal bumps lower shift first") {
  // bumps at 500 Hz and 1498 Hz on a 2 Hz grid
  std::vector<double> y;
  for (int d = 0; d <= 1000; ++d) {
    const double f = 2.0 * d;
    y.push_back(std::exp(-0.5 * std::pow((f - 500.0) / 20.0, 2)) + std::exp(-0.5 * std::pow((f - 1498.0) / 20.0, 2)));
  }
  const auto peaks = find_peaks(curve(y, 2.0), 2, 50.0);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].shift_hz == doctest::Approx(500.0).epsilon(1e-6));
  CHECK(peaks[1].shift_hz == doctest::Approx(1498.0).epsilon(1e-6));
}

TEST_CASE("find_peaks on a ramp gives the range edge") {
  std::vector<double> y;
  for (int d = 0; d < 50; ++d) y.push_back(0.1 * d);
  const auto peaks = find_peaks(curve(y, 2.0), 3, 10.0);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].shift_hz == doctest::Approx(98.0));
}

TEST_CASE("find_peaks suppresses close neighbours") {
  std::vector<double> y;
  for (int d = 0; d <= 300; ++d) {
    const double f = 2.0 * d;
    y.push_back(std::exp(-0.5 * std::pow((f - 200.0) / 5.0, 2)) + 0.9 * std::exp(-0.5 * std::pow((f - 230.0) / 5.0, 2)) +
                0.5 * std::exp(-0.5 * std::pow((f - 400.0) / 5.0, 2)));
  }
  // the zero tail at bin 0 is a fourth, lowest candidate
  const auto near = find_peaks(curve(y, 2.0), 2, 50.0);
  REQUIRE(near.size() == 2);
  CHECK(near[0].shift_hz == doctest::Approx(200.0).epsilon(1e-3));
  CHECK(near[1].shift_hz == doctest::Approx(400.0).epsilon(1e-3));
  const auto all = find_peaks(curve(y, 2.0), 3, 10.0);
  CHECK(all.size() == 3);
}

TEST_CASE("sample variance") {
  CHECK(sample_variance({}) == 0.0);
  CHECK(sample_variance({4.0}) == 0.0);
  CHECK(sample_variance({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("speech verdict ignores a constant offset of the pitch trace") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> trace(50);
    const double spread = testing::uniform(rng, 0, 12);
    for (auto& v : trace) v = 150.0 + testing::uniform(rng, -spread, spread);
    auto moved = trace;
    const double c = testing::uniform(rng, -60, 60);
    for (auto& v : moved) v += c;
    const double a = sample_variance(trace), b = sample_variance(moved);
    CHECK(b == doctest::Approx(a).epsilon(1e-9));
    if (std::abs(a - 25.0) > 1e-6) CHECK((a >= 25.0) == (b >= 25.0));
  }
}

TEST_CASE("smoother leaves a constant trace alone") {
  const std::vector<double> trace(100, 150.0);
  const auto out = smooth_pitch_trace(trace, std::vector<double>(100, 1.0));
  for (double v : out) CHECK(std::abs(v - 150.0) < 1e-9);
  CHECK(smooth_pitch_trace({}, {}).empty());
  CHECK(smooth_pitch_trace({120.0}, {1.0}) == std::vector<double>{120.0});
}

TEST_CASE("smoother attenuates a single outlier by at least half") {
  std::vector<double> trace(101, 150.0);
  trace[50] += 200.0;
  const auto out = smooth_pitch_trace(trace, std::vector<double>(101, 1.0));
  CHECK(out[50] - 150.0 <= 100.0);
  CHECK(out[50] > 150.0);
}

TEST_CASE("smoother tracks a linear ramp") {
  std::vector<double> trace(101);
  for (std::size_t t = 0; t < trace.size(); ++t) trace[t] = 100.0 + static_cast<double>(t);
  const auto out = smooth_pitch_trace(trace, std::vector<double>(101, 1.0));
  double worst = 0.0;
  for (std::size_t t = 10; t < trace.size(); ++t) worst = std::max(worst, std::abs(out[t] - trace[t]));
  CHECK(worst < 2.0);
}

TEST_CASE("smoother leans on strong frames") {
  std::vector<double> trace(60, 150.0), energy(60, 1.0);
  trace[30] = 250.0;
  const auto even = smooth_pitch_trace(trace, energy);
  energy[30] = 0.01;
  const auto weak = smooth_pitch_trace(trace, energy);
  CHECK(std::abs(weak[30] - 150.0) < std::abs(even[30] - 150.0));
  CHECK_THROWS_AS(smooth_pitch_trace(trace, std::vector<double>(3, 1.0)), InvalidInput);
}

TEST_CASE("constant log offset keeps the argmax and the winning pitches") {
  std::mt19937_64 rng(6);
  RakeConfig cfg;
  cfg.fft_size = 2048;
  auto spec = testing::random_spectrogram(rng, 4, 1025);
  spec.bin_hz = cfg.bin_hz();
  auto moved = spec;
  for (auto& v : moved.values) v += 2.5;
  moved.log_floor += 2.5;
  const auto a = gamma_pc(spec, cfg), b = gamma_pc(moved, cfg);
  CHECK(a.winning_pitch == b.winning_pitch);
  const auto acc_a = accumulate(a, cfg.bin_hz()), acc_b = accumulate(b, cfg.bin_hz());
  const auto arg = [](const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
  CHECK(arg(acc_a.gamma_hat) == arg(acc_b.gamma_hat));
  const double delta = acc_b.gamma_hat[0] - acc_a.gamma_hat[0];
  CHECK(delta == doctest::Approx(4 * 2.5 * WeightTable(5, 2).total()));
  for (std::size_t d = 0; d < acc_a.num_shifts(); ++d)
    CHECK(acc_b.gamma_hat[d] - acc_a.gamma_hat[d] == doctest::Approx(delta).epsilon(1e-9));
}

TEST_CASE("estimate on a vibrato voice shifted by 500 Hz") {
  VoiceSpec v;
  v.duration_s = 4.0;
  v.breakpoints = {{0.0, 120.0}, {2.0, 180.0}, {4.0, 120.0}};
  v.vibrato_rate_hz = 5.0;
  v.vibrato_depth_hz = 4.0;
  v.num_harmonics = 15;
  const RakeConfig cfg;
  const auto est = analyse(voice_through_channel(v, 500.0, 20.0, 7), cfg);
  CHECK(std::abs(est.f_d_hz - 500.0) < 5.0);
  CHECK(est.is_speech);
  CHECK(est.is_speech == (est.pitch_variance_hz2 >= cfg.variance_threshold_hz2));
  REQUIRE(est.pitch_trace_hz.size() > 0);
  for (double p : est.pitch_trace_hz) {
    CHECK(p >= cfg.pitch_min_hz);
    CHECK(p <= cfg.pitch_max_hz);
  }
  CHECK(est.f_d_hz >= cfg.shift_min_hz);
  CHECK(est.f_d_hz <= cfg.shift_max_hz);
}

TEST_CASE("constant-pitch comb is not speech") {
  VoiceSpec v;
  v.duration_s = 3.0;
  v.breakpoints = {{0.0, 150.0}};
  v.num_harmonics = 12;
  const auto est = analyse(voice_through_channel(v, 300.0, 20.0, 3), RakeConfig{});
  CHECK(est.pitch_variance_hz2 < 1.0);
  CHECK_FALSE(est.is_speech);
  CHECK(std::abs(est.f_d_hz - 300.0) < 5.0);
}

TEST_CASE("two talkers give a primary and a secondary peak") {
  std::mt19937_64 rng(12);
  VoiceSpec a = random_voice(rng, 5.0);
  VoiceSpec b = random_voice(rng, 5.0);
  ChannelSpec ca, cb;
  ca.cfd_hz = 100.0;
  cb.cfd_hz = 1098.0;
  auto sig = mix(apply_channel(synth_voice(a), ca, 1), apply_channel(synth_voice(b), cb, 2), 1.0);
  add_noise(sig, 20.0, 3);
  const auto est = analyse(sig, RakeConfig{});
  std::vector<double> found{est.f_d_hz};
  for (const auto& p : est.secondary_peaks) found.push_back(p.shift_hz);
  auto near = [&](double f) {
    return std::any_of(found.begin(), found.end(), [f](double x) { return std::abs(x - f) < 5.0; });
  };
  CHECK(near(100.0));
  CHECK(near(1098.0));
  CHECK((std::abs(est.f_d_hz - 100.0) < 5.0 || std::abs(est.f_d_hz - 1098.0) < 5.0));
}

TEST_CASE("empty slice is rejected") {
  GammaSlice s;
  CHECK_THROWS_AS(estimate_cfd(s, RakeConfig{}), InvalidInput);
}
