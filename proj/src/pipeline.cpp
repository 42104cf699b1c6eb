#include "cfd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cfd/eval.hpp"
#include "cfd/parallel.hpp"
#include "cfd/simulate.hpp"

namespace cfd {
namespace {

constexpr int kEstimatorRate = 8000;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Engine parse_engine(const std::string& name) {
  if (name == "direct") return Engine::direct;
  if (name == "pc") return Engine::pc;
  throw InvalidInput("unknown engine '" + name + "' (expected direct or pc)");
}

GammaSlice compute_slice(const LogSpectrogram& spec, const RakeConfig& cfg, const AnalysisOptions& opt) {
  const unsigned threads = resolve_threads(opt.threads);
  if (opt.engine == Engine::direct) return direct_slice(spec, cfg, threads);
  return gamma_pc(spec, cfg, threads, opt.kernel);
}

CfdEstimate analyse(const AudioSegment& seg, const RakeConfig& cfg, const AnalysisOptions& opt) {
  if (seg.sample_rate != kEstimatorRate)
    throw InvalidInput("sample rate " + std::to_string(seg.sample_rate) +
                       " Hz is not supported by the estimator; resample to 8000 Hz first (e.g. sox in.wav -r 8000 out.wav)");
  cfg.validate();
  const LogSpectrogram spec = stft_log_psd(seg, cfg, resolve_threads(opt.threads));
  return estimate_cfd(compute_slice(spec, cfg, opt), cfg);
}

ResultRecord to_record(const std::string& input, const AudioSegment& seg, const CfdEstimate& est) {
  ResultRecord r;
  r.input_path = input;
  r.segment_start_s = 0.0;
  r.segment_end_s = seg.duration_s();
  r.f_d_hz = est.f_d_hz;
  r.peak_score = est.peak_score;
  r.is_speech = est.is_speech;
  r.pitch_variance_hz2 = est.pitch_variance_hz2;
  for (const auto& p : est.secondary_peaks) r.secondary.push_back({p.shift_hz, p.score});
  return r;
}

EstimateReport run_estimate(const std::vector<std::string>& inputs, const RakeConfig& cfg, const AnalysisOptions& opt) {
  cfg.validate();
  const unsigned threads = resolve_threads(opt.threads);
  // spread files over workers when there are enough of them, frames otherwise
  const bool per_file = inputs.size() >= threads && threads > 1;
  AnalysisOptions inner = opt;
  inner.threads = per_file ? 1 : threads;

  std::vector<ResultRecord> records(inputs.size());
  std::vector<std::string> errors(inputs.size());
  std::vector<char> ok(inputs.size(), 0);
  parallel_chunks(inputs.size(), per_file ? threads : 1, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const AudioSegment seg = read_wav(inputs[i]);
        records[i] = to_record(inputs[i], seg, analyse(seg, cfg, inner));
        ok[i] = 1;
      } catch (const std::exception& e) {
        errors[i] = inputs[i] + ": " + e.what();
      }
    }
  });
  EstimateReport rep;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (ok[i]) rep.records.push_back(std::move(records[i]));
    else rep.errors.push_back(std::move(errors[i]));
  }
  return rep;
}

std::string run_pitch(const std::string& input, const RakeConfig& cfg, const AnalysisOptions& opt) {
  const AudioSegment seg = read_wav(input);
  const CfdEstimate est = analyse(seg, cfg, opt);
  std::vector<double> energy(est.frame_score.size());
  if (!energy.empty()) {
    const double lo = *std::min_element(est.frame_score.begin(), est.frame_score.end());
    for (std::size_t t = 0; t < energy.size(); ++t) energy[t] = est.frame_score[t] - lo;
  }
  const auto smooth = smooth_pitch_trace(est.pitch_trace_hz, energy, cfg.smoother_q_over_r);
  std::string out = "t_s,pitch_hz,smoothed_hz,score\n";
  for (std::size_t t = 0; t < est.pitch_trace_hz.size(); ++t) {
    const double centre = (static_cast<double>(t * cfg.hop_samples()) + 0.5 * static_cast<double>(cfg.fft_size)) /
                          cfg.sample_rate;
    out += fmt(centre) + "," + fmt(est.pitch_trace_hz[t]) + "," + fmt(smooth[t]) + "," + fmt(est.frame_score[t]) + "\n";
  }
  return out;
}

std::string run_simulate(const SimulateOptions& opt) {
  if (opt.count == 0 || opt.cfds_hz.empty()) throw InvalidInput("simulate: nothing to generate");
  std::filesystem::create_directories(opt.out_dir);
  std::mt19937_64 rng(opt.seed);
  std::string manifest;
  std::size_t index = 0;
  for (double cfd : opt.cfds_hz) {
    for (std::size_t k = 0; k < opt.count; ++k, ++index) {
      ManifestRecord rec;
      char name[32];
      std::snprintf(name, sizeof name, "sim_%04zu.wav", index);
      rec.path = (std::filesystem::path(opt.out_dir) / name).string();
      rec.cfd_hz = cfd;
      rec.snr_db = opt.snr_db;
      rec.duration_s = opt.duration_s;
      rec.seed = rng();
      rec.voice = random_voice(rng, opt.duration_s);
      ChannelSpec ch;
      ch.cfd_hz = cfd;
      ch.snr_db = opt.snr_db;
      AudioSegment out = apply_channel(synth_voice(rec.voice), ch, rec.seed);
      write_wav(out, rec.path);
      manifest += to_manifest_line(rec) + "\n";
    }
  }
  const std::string path = (std::filesystem::path(opt.out_dir) / "manifest.jsonl").string();
  write_text(manifest, path);
  return path;
}

std::string run_eval(const std::string& manifest_path, const std::string& results_path, std::string* gnuplot_out) {
  const auto manifest = read_manifest(manifest_path);
  const std::string text = read_file(results_path);
  const auto first = text.find_first_not_of(" \t\r\n");
  const auto results = (first != std::string::npos && text[first] == '[') ? parse_results_json(text)
                                                                           : parse_results_csv(text);
  std::map<std::string, const ManifestRecord*> by_path, by_name;
  for (const auto& m : manifest) {
    by_path[m.path] = &m;
    by_name[std::filesystem::path(m.path).filename().string()] = &m;
  }
  std::vector<double> est, truth, len;
  for (const auto& r : results) {
    const ManifestRecord* m = nullptr;
    if (auto it = by_path.find(r.input_path); it != by_path.end()) m = it->second;
    else if (auto jt = by_name.find(std::filesystem::path(r.input_path).filename().string()); jt != by_name.end())
      m = jt->second;
    if (m == nullptr) throw InvalidInput("eval: no manifest entry for " + r.input_path);
    est.push_back(r.f_d_hz);
    truth.push_back(m->cfd_hz);
    len.push_back(r.segment_end_s - r.segment_start_s);
  }
  const auto hist = classify_errors(est, truth, len);
  if (gnuplot_out) *gnuplot_out = hist.to_gnuplot();
  return hist.to_csv();
}

}  // namespace cfd
