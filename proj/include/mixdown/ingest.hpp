#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mixdown/model.hpp"
#include "mixdown/recipe.hpp"

namespace mixdown {

// Ordered set of input datasets. Registration order fixes id assignment.
class SourceRegistry {
 public:
  struct Entry {
    std::string name;
    std::filesystem::path path;
    std::int64_t record_count = 0;
  };

  SourceRegistry() = default;
  explicit SourceRegistry(const std::vector<SourceSpec>& specs);

  void add(std::string name, std::filesystem::path path);
  bool contains(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

 private:
  std::vector<Entry> entries_;
};

enum class LineStatus { ok, blank, parse_error, schema_error };

// Parses one Alpaca JSONL line into instruction/input/output. Extra keys are
// ignored; a missing or empty "output" and a missing "instruction" are schema
// errors; invalid UTF-8 is a parse error.
LineStatus parse_line(std::string_view line, Sample& out);

using SampleSink = std::function<void(Sample&&)>;

// Streams every source in registry order, one line in flight at a time.
// Ids are assigned 0,1,2,... over accepted samples. Fills record_count per
// source and returns the "ingest" StageReport (parse_error / schema_error).
// A missing source file throws ErrorKind::io before anything is read.
StageReport read_sources(SourceRegistry& registry, const SampleSink& sink);

std::filesystem::path sidecar_path(const std::filesystem::path& dataset);

nlohmann::ordered_json sample_json(const Sample& s);
nlohmann::ordered_json metrics_json(const Record& r);

// Writes the dataset JSONL plus its metrics sidecar in sequence order.
// Files are staged under temporary names and renamed on success; on failure
// nothing is left behind and ErrorKind::io is thrown.
std::size_t write_dataset(std::span<const Record> records, const std::filesystem::path& path);

// Reads a dataset written by write_dataset. Without a sidecar, ids are line
// numbers, the source is the file stem and only basic scores are filled.
std::vector<Record> read_dataset(const std::filesystem::path& path);

}  // namespace mixdown
