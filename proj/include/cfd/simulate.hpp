#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cfd/spectral.hpp"

namespace cfd {

struct PitchPoint {
  double t_s;
  double hz;
};

struct Interval {
  double start_s;
  double end_s;
};

/// Harmonic voice with a piecewise-linear pitch contour plus optional
/// sinusoidal vibrato. The contour is held constant outside its breakpoints.
struct VoiceSpec {
  std::vector<PitchPoint> breakpoints{{0.0, 150.0}};
  double vibrato_rate_hz = 0.0;
  double vibrato_depth_hz = 0.0;
  double harmonic_rolloff = 1.0;  // a_h = h^-rolloff
  int num_harmonics = 10;
  double duration_s = 1.0;
  /// Voiced intervals; empty means voiced throughout. Elsewhere the output is silent.
  std::vector<Interval> voiced;
  int sample_rate = 8000;

  double pitch_at(double t) const;
  bool voiced_at(double t) const;
  void validate() const;
};

/// Phase-continuous sum of a_h cos(h phi(t)), silenced outside the voiced
/// intervals (5 ms raised-cosine edges), peak-normalised to 0.9.
AudioSegment synth_voice(const VoiceSpec& spec);

/// Pitch ground truth per analysis frame (centre of each frame), NaN when unvoiced.
std::vector<double> true_pitch_trace(const VoiceSpec& spec, std::size_t fft_size, std::size_t hop,
                                     std::size_t num_frames);

struct ChannelSpec {
  double cfd_hz = 0.0;
  double bandwidth_hz = 2700.0;
  double snr_db = std::numeric_limits<double>::infinity();
  int sample_rate = 8000;

  void validate() const;
};

/// Linear-phase Kaiser low-pass with at least 80 dB stopband attenuation.
std::vector<double> design_lowpass(double cutoff_hz, double transition_hz, int sample_rate);

/// Band-limit, single-sideband shift by cfd_hz, drop what would pass Nyquist,
/// then add white Gaussian noise at snr_db (skipped for infinite SNR).
AudioSegment apply_channel(const AudioSegment& seg, const ChannelSpec& ch, std::uint64_t seed);

/// Band limit only (the reference the identity channel reproduces).
AudioSegment band_limit(const AudioSegment& seg, double bandwidth_hz);

/// Adds N(0, sigma^2) with sigma set from the mean signal power and snr_db.
void add_noise(AudioSegment& seg, double snr_db, std::uint64_t seed);

/// Sample-wise sum; the shorter input is zero-extended.
AudioSegment mix(const AudioSegment& a, const AudioSegment& b, double gain_b = 1.0);

/// Random speech-like voice: smooth contour in [lo_hz, hi_hz] with vibrato,
/// short unvoiced pauses. Pitch standard deviation comes out well above 10 Hz.
VoiceSpec random_voice(std::mt19937_64& rng, double duration_s, double lo_hz = 100.0, double hi_hz = 250.0);

/// One line of the corpus manifest.
struct ManifestRecord {
  std::string path;
  double cfd_hz = 0.0;
  double snr_db = 0.0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  VoiceSpec voice;
};

std::string to_manifest_line(const ManifestRecord& rec);
ManifestRecord parse_manifest_line(const std::string& line);
std::vector<ManifestRecord> read_manifest(const std::string& path);

}  // namespace cfd
