#include "cfd/rake.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfd/overlap_save.hpp"
#include "cfd/parallel.hpp"

namespace cfd {

SearchGrid make_grid(const RakeConfig& cfg, const LogSpectrogram& spec) {
  cfg.validate();
  const double bin = spec.bin_hz;
  if (!(bin > 0.0)) throw InvalidInput("spectrogram has no bin resolution");
  constexpr double slack = 1e-9;
  SearchGrid g;
  g.pitch_lo = static_cast<int>(std::ceil(cfg.pitch_min_hz / bin - slack));
  g.pitch_hi = static_cast<int>(std::floor(cfg.pitch_max_hz / bin + slack));
  g.shift_lo = static_cast<int>(std::ceil(cfg.shift_min_hz / bin - slack));
  g.shift_hi = static_cast<int>(std::floor(cfg.shift_max_hz / bin + slack));
  validate_grid(g, spec.num_bins);
  return g;
}

void validate_grid(const SearchGrid& g, std::size_t num_bins) {
  if (g.pitch_lo < 1 || g.pitch_lo > g.pitch_hi) throw InvalidInput("empty or non-positive pitch bin range");
  if (g.shift_lo < 0 || g.shift_lo > g.shift_hi) throw InvalidInput("empty or negative shift bin range");
  if (static_cast<std::size_t>(g.shift_hi) >= num_bins)
    throw InvalidInput("shift range exceeds the spectrum (" + std::to_string(num_bins) + " bins)");
}

double comb_response(std::span<const double> frame, double log_floor, const HarmonicComb& comb, int shift) {
  const auto n = static_cast<long long>(frame.size());
  double acc = 0.0;
  for (const auto& tap : comb.taps) {
    const long long k = static_cast<long long>(shift) + tap.offset;
    const double v = (k >= 0 && k < n) ? frame[static_cast<std::size_t>(k)] : log_floor;
    acc += tap.weight * v;
  }
  return acc;
}

std::vector<HarmonicComb> build_combs(const SearchGrid& grid, const WeightTable& table) {
  std::vector<HarmonicComb> combs;
  combs.reserve(grid.num_pitches());
  for (int p = grid.pitch_lo; p <= grid.pitch_hi; ++p) combs.push_back(build_comb(p, table));
  return combs;
}

GammaTensor gamma_direct(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table,
                         std::size_t memory_budget_bytes) {
  validate_grid(grid, spec.num_bins);
  const std::size_t P = grid.num_pitches();
  const std::size_t D = grid.num_shifts();
  const std::size_t T = spec.num_frames;
  const double bytes = static_cast<double>(T) * static_cast<double>(P) * static_cast<double>(D) * sizeof(double);
  if (bytes > static_cast<double>(memory_budget_bytes))
    throw RuntimeFailure("direct Gamma tensor needs " + std::to_string(static_cast<long long>(bytes)) +
                         " bytes (budget " + std::to_string(memory_budget_bytes) +
                         "); use the streaming engines direct_slice or gamma_pc");

  const auto combs = build_combs(grid, table);
  GammaTensor out;
  out.grid = grid;
  out.num_frames = T;
  out.values.resize(T * P * D);
  for (std::size_t t = 0; t < T; ++t) {
    const auto frame = spec.frame(t);
    for (std::size_t p = 0; p < P; ++p) {
      double* row = out.values.data() + (t * P + p) * D;
      for (std::size_t d = 0; d < D; ++d)
        row[d] = comb_response(frame, spec.log_floor, combs[p], grid.shift_lo + static_cast<int>(d));
    }
  }
  return out;
}

GammaTensor gamma_direct(const LogSpectrogram& spec, const RakeConfig& cfg) {
  return gamma_direct(spec, make_grid(cfg, spec), build_weight_table(cfg), cfg.direct_memory_budget_bytes);
}

GammaSlice reduce_max(const GammaTensor& tensor) {
  const std::size_t P = tensor.grid.num_pitches();
  const std::size_t D = tensor.grid.num_shifts();
  GammaSlice out;
  out.grid = tensor.grid;
  out.num_frames = tensor.num_frames;
  out.gamma_prime.assign(tensor.num_frames * D, -std::numeric_limits<double>::infinity());
  out.winning_pitch.assign(tensor.num_frames * D, tensor.grid.pitch_lo);
  for (std::size_t t = 0; t < tensor.num_frames; ++t) {
    double* best = out.gamma_prime.data() + t * D;
    int* win = out.winning_pitch.data() + t * D;
    for (std::size_t p = 0; p < P; ++p) {
      const double* row = tensor.values.data() + (t * P + p) * D;
      const int pitch = tensor.grid.pitch_lo + static_cast<int>(p);
      for (std::size_t d = 0; d < D; ++d) {
        if (row[d] > best[d]) {
          best[d] = row[d];
          win[d] = pitch;
        }
      }
    }
  }
  return out;
}

GammaSlice direct_slice(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table,
                        unsigned threads) {
  validate_grid(grid, spec.num_bins);
  const std::size_t P = grid.num_pitches();
  const std::size_t D = grid.num_shifts();
  const auto combs = build_combs(grid, table);
  GammaSlice out;
  out.grid = grid;
  out.num_frames = spec.num_frames;
  out.gamma_prime.resize(spec.num_frames * D);
  out.winning_pitch.resize(spec.num_frames * D);
  parallel_chunks(spec.num_frames, resolve_threads(threads), [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto frame = spec.frame(t);
      for (std::size_t d = 0; d < D; ++d) {
        const int shift = grid.shift_lo + static_cast<int>(d);
        double best = -std::numeric_limits<double>::infinity();
        int win = grid.pitch_lo;
        for (std::size_t p = 0; p < P; ++p) {
          const double v = comb_response(frame, spec.log_floor, combs[p], shift);
          if (v > best) {
            best = v;
            win = combs[p].pitch_bin;
          }
        }
        out.gamma_prime[t * D + d] = best;
        out.winning_pitch[t * D + d] = win;
      }
    }
  });
  return out;
}

GammaSlice direct_slice(const LogSpectrogram& spec, const RakeConfig& cfg, unsigned threads) {
  return direct_slice(spec, make_grid(cfg, spec), build_weight_table(cfg), threads);
}

// ---------------------------------------------------------------------------
// PcEngine

namespace {

// Neighbouring pitches sharing one set of forward block transforms (comb_spectra).
constexpr std::size_t kPitchesPerGroup = 8;

struct PitchGroup {
  std::size_t first = 0;     // index into combs
  std::size_t count = 0;
  std::size_t x_offset = 0;  // start of this group's input inside the extended frame
  OverlapSaveBank bank;
};

std::size_t pick_block_size(std::size_t K, std::size_t out_len, std::size_t filters) {
  const std::size_t largest = next_pow2(out_len + K - 1);
  std::size_t best_n = largest;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t n = std::max<std::size_t>(16, next_pow2(K)); n <= largest; n <<= 1) {
    const std::size_t valid = n - K + 1;
    const std::size_t blocks = (out_len + valid - 1) / valid;
    const double cost = static_cast<double>(blocks) * static_cast<double>(n) * std::log2(static_cast<double>(n)) *
                        static_cast<double>(filters + 1);
    if (cost < best_cost) {
      best_cost = cost;
      best_n = n;
    }
  }
  return best_n;
}

// One pitch of the shift-theorem kernel: S(d + h p) summed over harmonics,
// screened against the running per-shift maximum in the same pass.
struct HarmonicSieve {
  const double* smooth;  // S at shift index 0
  int pitch;
  const double* peaks;
  double add;
  double margin;
};

template <int Tau>
void sieve_pass(const HarmonicSieve& sv, std::size_t D, double* __restrict best, int* __restrict win,
                unsigned char* __restrict flag) {
  const double* rows[Tau];
  double c[Tau];
  for (int h = 0; h < Tau; ++h) {
    rows[h] = sv.smooth + (h + 1) * sv.pitch;
    c[h] = sv.peaks[h];
  }
  for (std::size_t d = 0; d < D; ++d) {
    double v = sv.add;
    for (int h = 0; h < Tau; ++h) v += c[h] * rows[h][d];
    const bool near = std::abs(v - best[d]) <= sv.margin;
    const bool take = v > best[d];
    flag[d] |= static_cast<unsigned char>(near);
    best[d] = take ? v : best[d];
    win[d] = take ? sv.pitch : win[d];
  }
}

}  // namespace

struct PcEngine::Impl {
  PcKernel kernel = PcKernel::harmonic_shift;
  SearchGrid grid;
  std::size_t num_bins = 0;
  double log_floor = 0.0;
  int tau_max = 0;
  std::vector<HarmonicComb> combs;
  std::vector<double> weight_sums;
  std::vector<double> harmonic_peaks;  // peak(h), h = 1..tau_max
  int base = 0;                        // absolute bin of extended-frame index 0
  std::size_t ext_len = 0;
  std::size_t read_span = 0;           // extended-frame indices one shift reads, minus one
  double max_weight_sum = 0.0;
  std::size_t max_taps = 0;
  std::size_t max_block = 0;

  // comb_spectra
  std::vector<PitchGroup> groups;

  // harmonic_shift: triangle-smoothed frame S(k) for k in [smooth_lo, smooth_lo + smooth_len)
  std::vector<OverlapSaveBank> triangle;
  int smooth_lo = 0;
  std::size_t smooth_len = 0;
  std::size_t smooth_x_offset = 0;

  struct Scratch {
    std::vector<double> ext;
    std::vector<std::size_t> run_end;  // last index of the constant run starting at i
    std::vector<double> best;
    std::vector<int> win;
    std::vector<unsigned char> flag;
    std::vector<double> smooth;
    std::vector<double> acc;
    std::vector<OverlapSaveBank::Workspace> ws;
  };
  Scratch make_scratch() const;

  void process_frame(std::span<const double> frame, double frame_floor, Scratch& s, double* gamma_out,
                     int* pitch_out) const;

  // Uncentred value at extended-frame index i.
  double frame_value(std::span<const double> frame, double frame_floor, std::size_t i) const {
    const long long k = base + static_cast<long long>(i);
    return (k >= 0 && k < static_cast<long long>(frame.size())) ? frame[static_cast<std::size_t>(k)] : frame_floor;
  }
};

PcEngine::PcEngine(const SearchGrid& grid, const WeightTable& table, std::size_t num_bins, double log_floor,
                   PcKernel kernel)
    : impl_(std::make_unique<Impl>()) {
  validate_grid(grid, num_bins);
  auto& m = *impl_;
  m.kernel = kernel;
  m.grid = grid;
  m.num_bins = num_bins;
  m.log_floor = log_floor;
  m.tau_max = table.tau_max();
  m.combs = build_combs(grid, table);
  for (int h = 1; h <= table.tau_max(); ++h) m.harmonic_peaks.push_back(table.peak(h));
  const std::size_t D = grid.num_shifts();

  int min_off = std::numeric_limits<int>::max();
  int max_off = std::numeric_limits<int>::min();
  for (const auto& c : m.combs) {
    double s = 0.0;
    for (const auto& tap : c.taps) s += tap.weight;
    m.weight_sums.push_back(s);
    m.max_weight_sum = std::max(m.max_weight_sum, s);
    m.max_taps = std::max(m.max_taps, c.taps.size());
    min_off = std::min(min_off, c.min_offset());
    max_off = std::max(max_off, c.max_offset());
  }
  m.base = grid.shift_lo + min_off;
  m.ext_len = static_cast<std::size_t>(grid.shift_hi + max_off - m.base + 1);
  m.read_span = static_cast<std::size_t>(max_off - min_off);

  if (kernel == PcKernel::comb_spectra) {
    for (std::size_t first = 0; first < m.combs.size(); first += kPitchesPerGroup) {
      const std::size_t count = std::min(kPitchesPerGroup, m.combs.size() - first);
      int omin = std::numeric_limits<int>::max();
      int omax = std::numeric_limits<int>::min();
      for (std::size_t i = first; i < first + count; ++i) {
        omin = std::min(omin, m.combs[i].min_offset());
        omax = std::max(omax, m.combs[i].max_offset());
      }
      const auto K = static_cast<std::size_t>(omax - omin + 1);
      std::vector<std::vector<double>> filters(count, std::vector<double>(K, 0.0));
      for (std::size_t i = 0; i < count; ++i)
        for (const auto& tap : m.combs[first + i].taps)
          filters[i][static_cast<std::size_t>(tap.offset - omin)] = tap.weight;
      const std::size_t n = pick_block_size(K, D, count);
      m.max_block = std::max(m.max_block, n);
      m.groups.push_back(PitchGroup{first, count, static_cast<std::size_t>(grid.shift_lo + omin - m.base),
                                    OverlapSaveBank(filters, n)});
    }
  } else {
    const int W = table.W();
    std::vector<double> tri(static_cast<std::size_t>(2 * W + 1));
    for (int nu = -W; nu <= W; ++nu)
      tri[static_cast<std::size_t>(nu + W)] = 1.0 - static_cast<double>(std::abs(nu)) / static_cast<double>(W + 1);
    // S is needed at d + h * p for every shift, harmonic and pitch.
    m.smooth_lo = grid.shift_lo + grid.pitch_lo;
    const int smooth_hi = grid.shift_hi + table.tau_max() * grid.pitch_hi;
    m.smooth_len = static_cast<std::size_t>(smooth_hi - m.smooth_lo + 1);
    m.smooth_x_offset = static_cast<std::size_t>(m.smooth_lo - W - m.base);
    const std::size_t n = pick_block_size(tri.size(), m.smooth_len, 1);
    m.max_block = n;
    m.triangle.emplace_back(std::vector<std::vector<double>>{tri}, n);
  }
}

PcEngine::~PcEngine() = default;
PcEngine::PcEngine(PcEngine&&) noexcept = default;
PcEngine& PcEngine::operator=(PcEngine&&) noexcept = default;

const SearchGrid& PcEngine::grid() const { return impl_->grid; }
PcKernel PcEngine::kernel() const { return impl_->kernel; }
std::size_t PcEngine::num_banks() const { return impl_->groups.size() + impl_->triangle.size(); }

PcEngine::Impl::Scratch PcEngine::Impl::make_scratch() const {
  const std::size_t D = grid.num_shifts();
  Scratch s;
  s.ext.resize(ext_len);
  s.run_end.resize(ext_len);
  s.best.resize(D);
  s.win.resize(D);
  s.flag.resize(D);
  s.acc.resize(D);
  s.smooth.resize(smooth_len);
  for (const auto& g : groups) s.ws.push_back(g.bank.make_workspace());
  for (const auto& b : triangle) s.ws.push_back(b.make_workspace());
  return s;
}

void PcEngine::Impl::process_frame(std::span<const double> frame, double frame_floor, Scratch& s, double* gamma_out,
                                   int* pitch_out) const {
  const std::size_t D = grid.num_shifts();
  const auto F = static_cast<long long>(num_bins);
  auto& ext = s.ext;

  // Edge-extended frame, centred so the transform-domain rounding scales with
  // the spread of the log-PSD rather than its absolute level.
  double mean = 0.0;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < ext_len; ++i) {
    const long long k = base + static_cast<long long>(i);
    ext[i] = (k >= 0 && k < F) ? frame[static_cast<std::size_t>(k)] : frame_floor;
    mean += ext[i];
    max_abs = std::max(max_abs, std::abs(ext[i]));
  }
  s.run_end[ext_len - 1] = ext_len - 1;
  for (std::size_t i = ext_len - 1; i-- > 0;) s.run_end[i] = ext[i] == ext[i + 1] ? s.run_end[i + 1] : i;
  mean /= static_cast<double>(ext_len);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < ext_len; ++i) {
    ext[i] -= mean;
    norm2 += ext[i] * ext[i];
  }
  norm2 = std::sqrt(norm2);

  // Bound on |screened value - reference comb sum|. Two values closer than
  // `margin` are not trusted to be ordered correctly.
  constexpr double u = std::numeric_limits<double>::epsilon();
  const double log_n = std::log2(static_cast<double>(max_block));
  const double err = 8.0 * (2.0 * log_n + 4.0) * u * norm2 * max_weight_sum +
                     static_cast<double>(max_taps + tau_max + 8) * u * max_weight_sum * (max_abs + std::abs(mean));
  const double margin = 4.0 * err;

  std::fill(s.best.begin(), s.best.end(), -std::numeric_limits<double>::infinity());
  std::fill(s.flag.begin(), s.flag.end(), 0);

  auto screen = [&](std::size_t pi, std::size_t start, const double* vals, std::size_t count) {
    const double add = mean * weight_sums[pi];
    const int pitch = combs[pi].pitch_bin;
    double* b = s.best.data() + start;
    int* w = s.win.data() + start;
    unsigned char* fl = s.flag.data() + start;
    for (std::size_t i = 0; i < count; ++i) {
      const double v = vals[i] + add;
      const bool near = std::abs(v - b[i]) <= margin;
      const bool take = v > b[i];
      fl[i] |= static_cast<unsigned char>(near);
      b[i] = take ? v : b[i];
      w[i] = take ? pitch : w[i];
    }
  };

  if (kernel == PcKernel::comb_spectra) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& grp = groups[g];
      std::span<const double> x(ext.data() + grp.x_offset, D + grp.bank.filter_length() - 1);
      grp.bank.run(x, D, s.ws[g], [&](std::size_t k, std::size_t start, std::span<const double> vals) {
        screen(grp.first + k, start, vals.data(), vals.size());
      });
    }
  } else {
    const auto& bank = triangle.front();
    std::span<const double> x(ext.data() + smooth_x_offset, smooth_len + bank.filter_length() - 1);
    bank.run(x, smooth_len, s.ws.back(), [&](std::size_t, std::size_t start, std::span<const double> vals) {
      std::copy(vals.begin(), vals.end(), s.smooth.begin() + static_cast<std::ptrdiff_t>(start));
    });
    for (std::size_t pi = 0; pi < combs.size(); ++pi) {
      const int p = combs[pi].pitch_bin;
      const double* src = s.smooth.data() + (grid.shift_lo - smooth_lo);
      const HarmonicSieve sieve{src, p, harmonic_peaks.data(), mean * weight_sums[pi], margin};
      switch (tau_max) {
        case 2: sieve_pass<2>(sieve, D, s.best.data(), s.win.data(), s.flag.data()); break;
        case 3: sieve_pass<3>(sieve, D, s.best.data(), s.win.data(), s.flag.data()); break;
        case 4: sieve_pass<4>(sieve, D, s.best.data(), s.win.data(), s.flag.data()); break;
        case 5: sieve_pass<5>(sieve, D, s.best.data(), s.win.data(), s.flag.data()); break;
        case 6: sieve_pass<6>(sieve, D, s.best.data(), s.win.data(), s.flag.data()); break;
        default: {
          double* acc = s.acc.data();
          std::fill(acc, acc + D, 0.0);
          for (int h = 1; h <= tau_max; ++h) {
            const double c = harmonic_peaks[static_cast<std::size_t>(h - 1)];
            const double* row = src + h * p;
            for (std::size_t d = 0; d < D; ++d) acc[d] += c * row[d];
          }
          screen(pi, 0, acc, D);
        }
      }
    }
  }

  // Shifts whose every read lands in one constant run score identically for
  // a given pitch whatever the shift, so their tie-break is settled once.
  double run_value = 0.0;
  double run_best = 0.0;
  int run_pitch = 0;
  bool have_run = false;

  for (std::size_t d = 0; d < D; ++d) {
    const int shift = grid.shift_lo + static_cast<int>(d);
    if (s.flag[d]) {
      const bool constant = s.run_end[d] >= d + read_span;
      if (constant && have_run && frame_value(frame, frame_floor, d) == run_value) {
        gamma_out[d] = run_best;
        pitch_out[d] = run_pitch;
        continue;
      }
      // Near-tie: settle it with the reference sums, lowest pitch first.
      double bv = -std::numeric_limits<double>::infinity();
      int bp = grid.pitch_lo;
      for (const auto& c : combs) {
        const double v = comb_response(frame, frame_floor, c, shift);
        if (v > bv) {
          bv = v;
          bp = c.pitch_bin;
        }
      }
      gamma_out[d] = bv;
      pitch_out[d] = bp;
      if (constant) {
        have_run = true;
        run_value = frame_value(frame, frame_floor, d);
        run_best = bv;
        run_pitch = bp;
      }
    } else {
      const auto& c = combs[static_cast<std::size_t>(s.win[d] - grid.pitch_lo)];
      gamma_out[d] = comb_response(frame, frame_floor, c, shift);
      pitch_out[d] = s.win[d];
    }
  }
}

GammaSlice PcEngine::run(const LogSpectrogram& spec, unsigned threads) const {
  const auto& m = *impl_;
  if (spec.num_bins != m.num_bins)
    throw InvalidInput("spectrogram has " + std::to_string(spec.num_bins) + " bins, engine was built for " +
                       std::to_string(m.num_bins));
  const std::size_t D = m.grid.num_shifts();
  GammaSlice out;
  out.grid = m.grid;
  out.num_frames = spec.num_frames;
  out.gamma_prime.resize(spec.num_frames * D);
  out.winning_pitch.resize(spec.num_frames * D);

  parallel_chunks(spec.num_frames, resolve_threads(threads), [&](unsigned, std::size_t begin, std::size_t end) {
    auto scratch = m.make_scratch();
    for (std::size_t t = begin; t < end; ++t)
      m.process_frame(spec.frame(t), spec.log_floor, scratch, out.gamma_prime.data() + t * D,
                      out.winning_pitch.data() + t * D);
  });
  return out;
}

GammaSlice gamma_pc(const LogSpectrogram& spec, const SearchGrid& grid, const WeightTable& table, unsigned threads,
                    PcKernel kernel) {
  return PcEngine(grid, table, spec.num_bins, spec.log_floor, kernel).run(spec, threads);
}

GammaSlice gamma_pc(const LogSpectrogram& spec, const RakeConfig& cfg, unsigned threads, PcKernel kernel) {
  return gamma_pc(spec, make_grid(cfg, spec), build_weight_table(cfg), threads, kernel);
}

}  // namespace cfd
