#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfd/audio_io.hpp"
#include "cfd/config.hpp"
#include "cfd/estimator.hpp"
#include "cfd/rake.hpp"
#include "cfd/spectral.hpp"

namespace cfd {

enum class Engine { direct, pc };

Engine parse_engine(const std::string& name);

struct AnalysisOptions {
  Engine engine = Engine::pc;
  PcKernel kernel = PcKernel::harmonic_shift;
  unsigned threads = 1;  // 0 = all hardware threads
};

/// Gamma' for a spectrogram with the selected engine.
GammaSlice compute_slice(const LogSpectrogram& spec, const RakeConfig& cfg, const AnalysisOptions& opt);

/// Full chain for one 8 kHz segment: spectrogram, correlation, estimate.
CfdEstimate analyse(const AudioSegment& seg, const RakeConfig& cfg, const AnalysisOptions& opt = {});

ResultRecord to_record(const std::string& input, const AudioSegment& seg, const CfdEstimate& est);

struct EstimateReport {
  std::vector<ResultRecord> records;  // in input order, failed inputs omitted
  std::vector<std::string> errors;    // "path: message"
  bool ok() const { return errors.empty(); }
};

/// One record per readable 8 kHz input; failures are reported and skipped.
EstimateReport run_estimate(const std::vector<std::string>& inputs, const RakeConfig& cfg, const AnalysisOptions& opt);

/// t_s,pitch_hz,smoothed_hz,score for the winning shift of one input.
std::string run_pitch(const std::string& input, const RakeConfig& cfg, const AnalysisOptions& opt);

struct SimulateOptions {
  std::string out_dir = ".";
  std::size_t count = 5;  // files per shift value
  std::vector<double> cfds_hz{0.0, 100.0, 300.0, 500.0, 1000.0};
  double snr_db = 10.0;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
};

/// Writes sim_XXXX.wav files plus manifest.jsonl into out_dir; returns the manifest path.
std::string run_simulate(const SimulateOptions& opt);

/// Builds the error-class histogram of `results` against `manifest` (matched
/// by path, falling back to file name). Returns the CSV text.
std::string run_eval(const std::string& manifest_path, const std::string& results_path,
                     std::string* gnuplot_out = nullptr);

}  // namespace cfd
