#pragma once

#include <string>
#include <vector>

#include "cfd/spectral.hpp"

namespace cfd {

/// RIFF PCM 16-bit mono. Samples are scaled by 1/32768.
AudioSegment read_wav(const std::string& path);

/// Clips to [-1, 32767/32768] and rounds to the nearest 16-bit code.
void write_wav(const AudioSegment& seg, const std::string& path);

struct SecondaryPeak {
  double f_d_hz = 0.0;
  double score = 0.0;
};

struct ResultRecord {
  std::string input_path;
  double segment_start_s = 0.0;
  double segment_end_s = 0.0;
  double f_d_hz = 0.0;
  double peak_score = 0.0;
  bool is_speech = false;
  double pitch_variance_hz2 = 0.0;
  std::vector<SecondaryPeak> secondary;
};

enum class ResultFormat { csv, json };

ResultFormat parse_result_format(const std::string& name);

/// CSV: header `input,start_s,end_s,f_d_hz,score,is_speech,pitch_var_hz2,secondary`;
/// secondary peaks as `f:score` joined by `;`. JSON: array of objects.
std::string format_results(const std::vector<ResultRecord>& records, ResultFormat format);
void write_results(const std::vector<ResultRecord>& records, const std::string& path, ResultFormat format);

std::vector<ResultRecord> parse_results_csv(const std::string& text);
std::vector<ResultRecord> parse_results_json(const std::string& text);

/// Writes `text` to `path`, or to stdout when path is "-" or empty.
void write_text(const std::string& text, const std::string& path);

}  // namespace cfd
