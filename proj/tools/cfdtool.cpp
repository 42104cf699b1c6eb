// cfdtool: carrier frequency difference estimation for SSB speech recordings.

#include <cmath>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfd/audio_io.hpp"
#include "cfd/eval.hpp"
#include "cfd/pipeline.hpp"
#include "cfd/simulate.hpp"

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t fft = 0;
  std::string engine = "pc";
  unsigned threads = 1;
  std::string out = "-";
  std::string format = "csv";
  std::uint64_t seed = 1;
};

void add_common(CLI::App* app, Common& c, bool engine_flags) {
  app->add_option("--config", c.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a configuration key (key=value), repeatable");
  app->add_option("--fft", c.fft, "FFT size (2048, 4096 or 8192)");
  if (engine_flags) {
    app->add_option("--engine", c.engine, "Correlation engine")->check(CLI::IsMember({"direct", "pc"}));
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  }
  app->add_option("--out", c.out, "Output file ('-' for stdout)");
}

cfd::RakeConfig resolve_config(const Common& c) {
  cfd::RakeConfig cfg;
  if (!c.config_path.empty()) cfg = cfd::load_config_file(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw cfd::InvalidInput("--set expects key=value, got '" + kv + "'");
    if (!cfd::apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1)))
      throw cfd::InvalidInput("--set: unknown configuration key '" + kv.substr(0, eq) + "'");
  }
  if (c.fft != 0) cfg.fft_size = c.fft;
  cfg.validate();
  return cfg;
}

cfd::AnalysisOptions resolve_options(const Common& c) {
  cfd::AnalysisOptions opt;
  opt.engine = cfd::parse_engine(c.engine);
  opt.threads = c.threads;
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carrier frequency difference estimation for SSB speech"};
  app.require_subcommand(1);

  Common est_c;
  std::vector<std::string> est_inputs;
  auto* est = app.add_subcommand("estimate", "Estimate the carrier frequency difference of WAV files");
  add_common(est, est_c, true);
  est->add_option("--format", est_c.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  est->add_option("inputs", est_inputs, "8 kHz 16-bit mono WAV files");

  Common pitch_c;
  std::string pitch_input;
  auto* pitch = app.add_subcommand("pitch", "Pitch trace at the estimated shift of one WAV file");
  add_common(pitch, pitch_c, true);
  pitch->add_option("input", pitch_input, "8 kHz 16-bit mono WAV file")->required();

  Common sim_c;
  cfd::SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic SSB corpus with a JSON-lines manifest");
  sim->add_option("--out", sim_opt.out_dir, "Output directory")->required();
  sim->add_option("--count", sim_opt.count, "Files per shift value");
  sim->add_option("--cfd", sim_opt.cfds_hz, "Shift values in Hz")->delimiter(',');
  sim->add_option("--snr", sim_opt.snr_db, "SNR in dB");
  sim->add_option("--duration", sim_opt.duration_s, "Length of each file in seconds");
  sim->add_option("--seed", sim_opt.seed, "Random seed");

  Common bench_c;
  std::string bench_input;
  double bench_duration = 60.0;
  unsigned bench_repeats = 3;
  std::vector<std::size_t> bench_ffts{2048, 4096, 8192};
  std::vector<std::string> bench_engines{"direct", "pc-single", "pc-multi"};
  auto* bench = app.add_subcommand("bench", "Real-time factors by engine and FFT size");
  add_common(bench, bench_c, false);
  bench->add_option("--threads", bench_c.threads, "Threads for pc-multi (0 = all cores)");
  bench->add_option("--input", bench_input, "WAV file to time (default: synthetic voice)");
  bench->add_option("--duration", bench_duration, "Synthetic audio length in seconds");
  bench->add_option("--seed", bench_c.seed, "Seed of the synthetic audio");
  bench->add_option("--repeats", bench_repeats, "Runs per measurement (fastest kept)");
  bench->add_option("--ffts", bench_ffts, "FFT sizes")->delimiter(',');
  bench->add_option("--engines", bench_engines, "direct, pc-single, pc-multi")->delimiter(',');
  bench_c.threads = 0;

  std::string eval_manifest, eval_results, eval_gnuplot, eval_out = "-";
  auto* ev = app.add_subcommand("eval", "Error-class histogram of results against a simulation manifest");
  ev->add_option("--manifest", eval_manifest, "manifest.jsonl from simulate")->required()->check(CLI::ExistingFile);
  ev->add_option("--results", eval_results, "CSV or JSON from estimate")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "Histogram CSV ('-' for stdout)");
  ev->add_option("--gnuplot", eval_gnuplot, "Also write a gnuplot data file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) {
      const auto cfg = resolve_config(est_c);
      const auto rep = cfd::run_estimate(est_inputs, cfg, resolve_options(est_c));
      cfd::write_results(rep.records, est_c.out, cfd::parse_result_format(est_c.format));
      for (const auto& e : rep.errors) std::cerr << "error: " << e << '\n';
      return rep.ok() ? 0 : 2;
    }
    if (*pitch) {
      const auto cfg = resolve_config(pitch_c);
      cfd::write_text(cfd::run_pitch(pitch_input, cfg, resolve_options(pitch_c)), pitch_c.out);
      return 0;
    }
    if (*sim) {
      std::cerr << "manifest: " << cfd::run_simulate(sim_opt) << '\n';
      return 0;
    }
    if (*bench) {
      const auto cfg = resolve_config(bench_c);
      cfd::AudioSegment audio;
      if (!bench_input.empty()) {
        audio = cfd::read_wav(bench_input);
      } else {
        std::mt19937_64 rng(bench_c.seed);
        cfd::ChannelSpec ch;
        ch.cfd_hz = 300.0;
        ch.snr_db = 20.0;
        audio = cfd::apply_channel(cfd::synth_voice(cfd::random_voice(rng, bench_duration)), ch, bench_c.seed);
      }
      std::vector<cfd::BenchResult> results;
      for (auto fft : bench_ffts)
        for (const auto& name : bench_engines)
          results.push_back(cfd::benchmark_rtf(cfd::parse_bench_engine(name), fft, audio, cfg, bench_repeats,
                                               bench_c.threads));
      cfd::write_text(cfd::bench_to_csv(results), bench_c.out);
      return 0;
    }
    if (*ev) {
      std::string gp;
      cfd::write_text(cfd::run_eval(eval_manifest, eval_results, eval_gnuplot.empty() ? nullptr : &gp), eval_out);
      if (!eval_gnuplot.empty()) cfd::write_text(gp, eval_gnuplot);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
