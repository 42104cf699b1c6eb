#include "cfd/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cfd/config.hpp"

namespace cfd {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

std::string format_tag_name(std::uint16_t tag) {
  switch (tag) {
    case 1: return "PCM";
    case 3: return "IEEE float";
    case 6: return "A-law";
    case 7: return "mu-law";
    case 0xFFFE: return "extensible";
    default: return "tag " + std::to_string(tag);
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

constexpr const char* kCsvHeader = "input,start_s,end_s,f_d_hz,score,is_speech,pitch_var_hz2,secondary";

}  // namespace

AudioSegment read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open WAV file: " + path);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* b = reinterpret_cast<const unsigned char*>(data.data());
  const std::size_t size = data.size();
  const std::string where = path + ": ";
  if (size < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0)
    throw InvalidInput(where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  for (std::size_t pos = 12; pos + 8 <= size;) {
    const std::uint32_t len = le32(b + pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, size - body);
    if (std::memcmp(b + pos, "fmt ", 4) == 0) {
      if (avail < 16) throw InvalidInput(where + "truncated fmt chunk");
      std::uint16_t tag = le16(b + body);
      channels = le16(b + body + 2);
      rate = le32(b + body + 4);
      bits = le16(b + body + 14);
      if (tag == 0xFFFE && avail >= 26) tag = le16(b + body + 24);  // sub-format GUID starts with the tag
      if (tag != 1) throw InvalidInput(where + "unsupported sample format " + format_tag_name(tag) + " (16-bit PCM required)");
      have_fmt = true;
    } else if (std::memcmp(b + pos, "data", 4) == 0) {
      pcm = b + body;
      pcm_bytes = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw InvalidInput(where + "missing fmt chunk");
  if (channels != 1)
    throw InvalidInput(where + "unsupported channel count " + std::to_string(channels) + " (mono required)");
  if (bits != 16)
    throw InvalidInput(where + "unsupported bits per sample " + std::to_string(bits) + " (16 required)");
  if (rate == 0) throw InvalidInput(where + "sample rate is zero");
  if (pcm == nullptr) throw InvalidInput(where + "missing data chunk");

  AudioSegment seg;
  seg.sample_rate = static_cast<int>(rate);
  seg.samples.resize(pcm_bytes / 2);
  for (std::size_t i = 0; i < seg.samples.size(); ++i)
    seg.samples[i] = static_cast<std::int16_t>(le16(pcm + 2 * i)) / 32768.0;
  return seg;
}

void write_wav(const AudioSegment& seg, const std::string& path) {
  if (seg.sample_rate <= 0) throw InvalidInput("write_wav: sample_rate must be positive");
  const auto n = static_cast<std::uint32_t>(seg.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(seg.sample_rate));
  put32(out, static_cast<std::uint32_t>(seg.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, 2 * n);
  for (double v : seg.samples) {
    const double q = std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write WAV file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw RuntimeFailure("write failed: " + path);
}

ResultFormat parse_result_format(const std::string& name) {
  if (name == "csv") return ResultFormat::csv;
  if (name == "json") return ResultFormat::json;
  throw InvalidInput("unknown result format '" + name + "' (expected csv or json)");
}

std::string format_results(const std::vector<ResultRecord>& records, ResultFormat format) {
  if (format == ResultFormat::json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json sec = nlohmann::json::array();
      for (const auto& p : r.secondary) sec.push_back({{"f_d_hz", p.f_d_hz}, {"score", p.score}});
      arr.push_back({{"input", r.input_path},
                     {"start_s", r.segment_start_s},
                     {"end_s", r.segment_end_s},
                     {"f_d_hz", r.f_d_hz},
                     {"score", r.peak_score},
                     {"is_speech", r.is_speech},
                     {"pitch_var_hz2", r.pitch_variance_hz2},
                     {"secondary", sec}});
    }
    return arr.dump(2) + "\n";
  }
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    std::string sec;
    for (std::size_t i = 0; i < r.secondary.size(); ++i) {
      if (i) sec += ';';
      sec += num(r.secondary[i].f_d_hz) + ":" + num(r.secondary[i].score);
    }
    out += csv_field(r.input_path) + "," + num(r.segment_start_s) + "," + num(r.segment_end_s) + "," + num(r.f_d_hz) +
           "," + num(r.peak_score) + "," + (r.is_speech ? "1" : "0") + "," + num(r.pitch_variance_hz2) + "," + sec +
           "\n";
  }
  return out;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write file: " + path);
  f << text;
  if (!f) throw RuntimeFailure("write failed: " + path);
}

void write_results(const std::vector<ResultRecord>& records, const std::string& path, ResultFormat format) {
  write_text(format_results(records, format), path);
}

std::vector<ResultRecord> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("results CSV: missing or unexpected header");
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw InvalidInput("results CSV: expected 8 fields, got " + std::to_string(f.size()));
    ResultRecord r;
    r.input_path = f[0];
    r.segment_start_s = std::stod(f[1]);
    r.segment_end_s = std::stod(f[2]);
    r.f_d_hz = std::stod(f[3]);
    r.peak_score = std::stod(f[4]);
    r.is_speech = f[5] == "1";
    r.pitch_variance_hz2 = std::stod(f[6]);
    std::istringstream sec(f[7]);
    std::string item;
    while (std::getline(sec, item, ';')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw InvalidInput("results CSV: malformed secondary peak '" + item + "'");
      r.secondary.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ResultRecord> parse_results_json(const std::string& text) {
  std::vector<ResultRecord> out;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      ResultRecord r;
      r.input_path = j.at("input").get<std::string>();
      r.segment_start_s = j.at("start_s").get<double>();
      r.segment_end_s = j.at("end_s").get<double>();
      r.f_d_hz = j.at("f_d_hz").get<double>();
      r.peak_score = j.at("score").get<double>();
      r.is_speech = j.at("is_speech").get<bool>();
      r.pitch_variance_hz2 = j.at("pitch_var_hz2").get<double>();
      for (const auto& p : j.at("secondary")) r.secondary.push_back({p.at("f_d_hz").get<double>(), p.at("score").get<double>()});
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("results JSON: ") + e.what());
  }
  return out;
}

}  // namespace cfd
