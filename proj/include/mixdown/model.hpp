#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mixdown {

// One instruction-tuning record (Alpaca layout) tagged with its source.
struct Sample {
  std::uint64_t id = 0;
  std::string source;
  std::string instruction;
  std::string input;
  std::string output;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// instruction + "\n" + input + "\n" + output; an empty input collapses to a
// single separator. Dedup, length, PPL and hashing all read this form.
std::string rendered_text(const Sample& s);

// The question half used for conditional answer scoring:
// instruction + "\n" + input, or instruction alone when input is empty.
std::string prompt_text(const Sample& s);

struct QualityScores {
  std::int64_t text_length = 0;         // characters of rendered_text
  std::map<std::string, double> lang;   // language code -> confidence in [0,1]
  std::optional<double> ppl;
  std::optional<double> ifd_base;
  std::optional<double> ifd_tuned;
  std::int64_t token_count = 0;

  friend bool operator==(const QualityScores&, const QualityScores&) = default;
};

// Language with the highest confidence; ties go to the smaller code.
std::optional<std::string> top_language(const QualityScores& scores);

struct Record {
  Sample sample;
  QualityScores scores;
};

// Fresh measurements for a just-ingested sample (length and heuristic tokens).
QualityScores basic_scores(const Sample& s);

struct Histogram {
  std::string metric;
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
  std::int64_t underflow = 0;
  std::int64_t overflow = 0;

  std::int64_t in_range() const;
  std::int64_t total() const { return in_range() + underflow + overflow; }
};

struct StageReport {
  std::string stage;
  std::int64_t input_count = 0;
  std::int64_t output_count = 0;
  std::map<std::string, std::int64_t> rejections;
  std::vector<Histogram> histograms;
  nlohmann::json extras = nlohmann::json::object();

  void reject(const std::string& reason, std::int64_t n = 1) { rejections[reason] += n; }
  std::int64_t rejected_total() const;
  // output + sum(rejections) == input
  bool conserved() const { return output_count + rejected_total() == input_count; }
};

struct StageResult {
  std::vector<Record> records;
  StageReport report;
};

}  // namespace mixdown
