#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "cfd/rake.hpp"
#include "support.hpp"

using namespace cfd;

namespace {

// Literal triple loop over (h, nu) without tap merging.
double oracle_gamma(const LogSpectrogram& s, std::size_t t, int p, int d, const WeightTable& w) {
  double acc = 0.0;
  for (int h = 1; h <= w.tau_max(); ++h)
    for (int nu = -w.W(); nu <= w.W(); ++nu) {
      const long long k = static_cast<long long>(d) + static_cast<long long>(h) * p + nu;
      const double v = (k >= 0 && k < static_cast<long long>(s.num_bins)) ? s.at(t, static_cast<std::size_t>(k))
                                                                          : s.log_floor;
      acc += w(h, nu) * v;
    }
  return acc;
}

SearchGrid random_grid(std::mt19937_64& rng, std::size_t bins) {
  SearchGrid g;
  g.pitch_lo = testing::uniform_int(rng, 1, 30);
  g.pitch_hi = g.pitch_lo + testing::uniform_int(rng, 0, 40);
  g.shift_lo = testing::uniform_int(rng, 0, static_cast<int>(bins) / 2);
  g.shift_hi = testing::uniform_int(rng, g.shift_lo, static_cast<int>(bins) - 1);
  return g;
}

void check_same(const GammaSlice& a, const GammaSlice& b) {
  REQUIRE(a.gamma_prime.size() == b.gamma_prime.size());
  std::size_t value_diff = 0, pitch_diff = 0;
  for (std::size_t i = 0; i < a.gamma_prime.size(); ++i) {
    value_diff += a.gamma_prime[i] != b.gamma_prime[i];
    pitch_diff += a.winning_pitch[i] != b.winning_pitch[i];
  }
  CHECK(value_diff == 0);
  CHECK(pitch_diff == 0);
}

}  // namespace

TEST_CASE("direct engine matches the literal triple loop") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = testing::random_spectrogram(rng, 3, static_cast<std::size_t>(testing::uniform_int(rng, 64, 300)));
    const auto grid = random_grid(rng, spec.num_bins);
    const WeightTable w(testing::uniform_int(rng, 2, 5), testing::uniform_int(rng, 0, 3));
    const auto tensor = gamma_direct(spec, grid, w, std::size_t{1} << 30);
    for (std::size_t t = 0; t < spec.num_frames; ++t)
      for (std::size_t p = 0; p < grid.num_pitches(); ++p)
        for (std::size_t d = 0; d < grid.num_shifts(); ++d) {
          const double ref = oracle_gamma(spec, t, grid.pitch_lo + static_cast<int>(p), grid.shift_lo + static_cast<int>(d), w);
          REQUIRE(tensor.at(t, p, d) == doctest::Approx(ref).epsilon(1e-12));
        }
  }
}

TEST_CASE("reduce_max keeps the lowest pitch on ties") {
  GammaTensor g;
  g.grid = {5, 7, 0, 1};
  g.num_frames = 1;
  g.values = {1.0, 3.0,   // p = 5
              2.0, 3.0,   // p = 6
              2.0, 1.0};  // p = 7
  const auto s = reduce_max(g);
  CHECK(s.gamma(0, 0) == 2.0);
  CHECK(s.pitch(0, 0) == 6);
  CHECK(s.gamma(0, 1) == 3.0);
  CHECK(s.pitch(0, 1) == 5);
}

TEST_CASE("streamed direct slice equals the reduced tensor") {
  std::mt19937_64 rng(4);
  const auto spec = testing::random_spectrogram(rng, 4, 257);
  const SearchGrid grid{3, 20, 0, 256};
  const WeightTable w(4, 2);
  check_same(direct_slice(spec, grid, w, 1), reduce_max(gamma_direct(spec, grid, w, std::size_t{1} << 30)));
  check_same(direct_slice(spec, grid, w, 3), direct_slice(spec, grid, w, 1));
}

TEST_CASE("fast engine kernels equal the direct engine") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = testing::random_spectrogram(rng, static_cast<std::size_t>(testing::uniform_int(rng, 1, 4)),
                                                  static_cast<std::size_t>(testing::uniform_int(rng, 33, 700)));
    const auto grid = random_grid(rng, spec.num_bins);
    const WeightTable w(testing::uniform_int(rng, 2, 7), testing::uniform_int(rng, 0, 3));
    const auto ref = direct_slice(spec, grid, w);
    check_same(gamma_pc(spec, grid, w, 1, PcKernel::harmonic_shift), ref);
    check_same(gamma_pc(spec, grid, w, 2, PcKernel::comb_spectra), ref);
  }
}

TEST_CASE("fast engine on the default 8 kHz grid") {
  std::mt19937_64 rng(9);
  const RakeConfig cfg;
  auto spec = testing::random_spectrogram(rng, 2, 2049);
  spec.bin_hz = cfg.bin_hz();
  const auto ref = direct_slice(spec, cfg);
  check_same(gamma_pc(spec, cfg, 1), ref);
  check_same(gamma_pc(spec, cfg, 2), ref);
}

TEST_CASE("fast engine on silence and floored bands") {
  const RakeConfig cfg;
  std::mt19937_64 rng(10);
  auto spec = testing::random_spectrogram(rng, 3, 2049);
  spec.bin_hz = cfg.bin_hz();
  for (std::size_t f = 0; f < spec.num_bins; ++f) {
    spec.values[f] = spec.log_floor;                          // silent frame
    if (f > 1200) spec.values[spec.num_bins + f] = spec.log_floor;  // floored upper band
    if (f < 300) spec.values[2 * spec.num_bins + f] = -5.0;         // constant low band
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto fast = gamma_pc(spec, cfg, 1);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  check_same(fast, direct_slice(spec, cfg));
  CHECK(seconds < 0.5);
}

TEST_CASE("a planted comb wins at its pitch and shift") {
  const RakeConfig cfg;
  LogSpectrogram spec;
  spec.num_frames = 1;
  spec.num_bins = 2049;
  spec.fft_size = 4096;
  spec.bin_hz = cfg.bin_hz();
  spec.log_floor = std::log(1e-12);
  spec.values.assign(spec.num_bins, -10.0);
  const int pitch = 64, shift = 256;
  for (int h = 1; h <= 5; ++h) spec.values[static_cast<std::size_t>(shift + h * pitch)] = 5.0;
  const auto slice = gamma_pc(spec, cfg);
  const auto d = static_cast<std::size_t>(shift - slice.grid.shift_lo);
  CHECK(slice.pitch(0, d) == pitch);
  double best = -1e300;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < slice.num_shifts(); ++i)
    if (slice.gamma(0, i) > best) {
      best = slice.gamma(0, i);
      arg = i;
    }
  CHECK(arg == d);
}

TEST_CASE("grid mapping and validation") {
  const RakeConfig cfg;
  LogSpectrogram spec;
  spec.num_bins = 2049;
  spec.bin_hz = cfg.bin_hz();
  const auto g = make_grid(cfg, spec);
  CHECK(g.pitch_lo == 26);
  CHECK(g.pitch_hi == 204);
  CHECK(g.shift_lo == 0);
  CHECK(g.shift_hi == 1792);
  CHECK_THROWS_AS(validate_grid({1, 5, 0, 2049}, 2049), InvalidInput);
  CHECK_THROWS_AS(validate_grid({0, 5, 0, 10}, 2049), InvalidInput);
}

TEST_CASE("dense tensor over budget is refused") {
  std::mt19937_64 rng(1);
  const auto spec = testing::random_spectrogram(rng, 2, 129);
  CHECK_THROWS_AS(gamma_direct(spec, {2, 20, 0, 128}, WeightTable(3, 1), 1000), RuntimeFailure);
}

TEST_CASE("engine refuses a spectrogram of another size") {
  std::mt19937_64 rng(1);
  const PcEngine engine({2, 10, 0, 100}, WeightTable(3, 1), 129, std::log(1e-12));
  CHECK_THROWS_AS(engine.run(testing::random_spectrogram(rng, 1, 257)), InvalidInput);
}
