#include "mixdown/ingest.hpp"

#include <fstream>

#include "mixdown/error.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

namespace fs = std::filesystem;

SourceRegistry::SourceRegistry(const std::vector<SourceSpec>& specs) {
  for (const auto& s : specs) add(s.name, s.path);
}

void SourceRegistry::add(std::string name, fs::path path) {
  if (name.empty()) throw Error(ErrorKind::config, "invalid_source", "empty source name");
  if (contains(name)) throw Error(ErrorKind::config, "invalid_source", "duplicate source '" + name + "'");
  entries_.push_back({std::move(name), std::move(path), 0});
}

bool SourceRegistry::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

LineStatus parse_line(std::string_view line, Sample& out) {
  if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) return LineStatus::blank;
  if (!text::is_valid_utf8(line)) return LineStatus::parse_error;
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) return LineStatus::parse_error;
  if (!j.is_object()) return LineStatus::schema_error;

  const auto ins = j.find("instruction");
  const auto outp = j.find("output");
  const auto inp = j.find("input");
  if (ins == j.end() || !ins->is_string()) return LineStatus::schema_error;
  if (outp == j.end() || !outp->is_string()) return LineStatus::schema_error;
  if (inp != j.end() && !inp->is_string() && !inp->is_null()) return LineStatus::schema_error;

  out.instruction = ins->get<std::string>();
  out.output = outp->get<std::string>();
  out.input = (inp != j.end() && inp->is_string()) ? inp->get<std::string>() : std::string{};
  if (out.output.empty()) return LineStatus::schema_error;
  return LineStatus::ok;
}

StageReport read_sources(SourceRegistry& registry, const SampleSink& sink) {
  for (const auto& e : registry.entries()) {
    if (!fs::is_regular_file(e.path)) {
      throw Error(ErrorKind::io, "missing_source", "source '" + e.name + "': cannot find " + e.path.string());
    }
  }

  StageReport report;
  report.stage = "ingest";
  std::uint64_t next_id = 0;
  std::string line;
  for (auto& e : registry.entries()) {
    std::ifstream in(e.path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "missing_source", "cannot open " + e.path.string());
    e.record_count = 0;
    while (std::getline(in, line)) {
      Sample s;
      switch (parse_line(line, s)) {
        case LineStatus::blank:
          continue;
        case LineStatus::parse_error:
          ++report.input_count;
          report.reject("parse_error");
          continue;
        case LineStatus::schema_error:
          ++report.input_count;
          report.reject("schema_error");
          continue;
        case LineStatus::ok:
          break;
      }
      ++report.input_count;
      ++report.output_count;
      ++e.record_count;
      s.id = next_id++;
      s.source = e.name;
      sink(std::move(s));
    }
    if (in.bad()) throw Error(ErrorKind::io, "read_failure", "error while reading " + e.path.string());
  }
  return report;
}

fs::path sidecar_path(const fs::path& dataset) {
  fs::path p = dataset;
  std::string stem = p.stem().string();
  return p.replace_filename(stem + ".metrics.jsonl");
}

nlohmann::ordered_json sample_json(const Sample& s) {
  nlohmann::ordered_json j;
  j["instruction"] = s.instruction;
  j["input"] = s.input;
  j["output"] = s.output;
  return j;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error(ErrorKind::io, "bad_metrics", std::string("field '") + key + "' is not a number");
  return it->get<double>();
}

}  // namespace

nlohmann::ordered_json metrics_json(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.sample.id;
  j["source"] = r.sample.source;
  j["text_length"] = r.scores.text_length;
  nlohmann::ordered_json lang = nlohmann::ordered_json::object();
  for (const auto& [code, score] : r.scores.lang) lang[code] = score;
  j["lang"] = lang;
  j["ppl"] = optional_number(r.scores.ppl);
  j["ifd_base"] = optional_number(r.scores.ifd_base);
  j["ifd_tuned"] = optional_number(r.scores.ifd_tuned);
  j["token_count"] = r.scores.token_count;
  return j;
}

std::size_t write_dataset(std::span<const Record> records, const fs::path& path) {
  const fs::path side = sidecar_path(path);
  const fs::path tmp_main = fs::path(path.string() + ".tmp");
  const fs::path tmp_side = fs::path(side.string() + ".tmp");
  auto cleanup = [&] {
    std::error_code ec;
    fs::remove(tmp_main, ec);
    fs::remove(tmp_side, ec);
  };
  try {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream main_out(tmp_main, std::ios::binary | std::ios::trunc);
    std::ofstream side_out(tmp_side, std::ios::binary | std::ios::trunc);
    if (!main_out || !side_out) throw Error(ErrorKind::io, "write_failure", "cannot create " + path.string());
    for (const auto& r : records) {
      main_out << sample_json(r.sample).dump() << '\n';
      side_out << metrics_json(r).dump() << '\n';
    }
    main_out.close();
    side_out.close();
    if (!main_out || !side_out) throw Error(ErrorKind::io, "write_failure", "short write to " + path.string());
    fs::rename(tmp_main, path);
    fs::rename(tmp_side, side);
  } catch (const Error&) {
    cleanup();
    throw;
  } catch (const std::exception& e) {
    cleanup();
    throw Error(ErrorKind::io, "write_failure", e.what());
  }
  return records.size();
}

std::vector<Record> read_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "missing_input", "cannot open " + path.string());
  const fs::path side = sidecar_path(path);
  std::ifstream side_in;
  const bool has_side = fs::is_regular_file(side);
  if (has_side) side_in.open(side, std::ios::binary);

  std::vector<Record> out;
  std::string line;
  std::string meta;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Record r;
    const LineStatus st = parse_line(line, r.sample);
    if (st == LineStatus::blank) continue;
    if (st != LineStatus::ok) {
      throw Error(ErrorKind::io, "bad_dataset", path.string() + ":" + std::to_string(line_no) + ": not a valid record");
    }
    r.scores = basic_scores(r.sample);
    if (has_side) {
      if (!std::getline(side_in, meta)) throw Error(ErrorKind::io, "bad_metrics", side.string() + " has fewer lines than " + path.string());
      const auto m = nlohmann::json::parse(meta, nullptr, false);
      if (m.is_discarded() || !m.is_object() || !m.contains("id") || !m.contains("source")) {
        throw Error(ErrorKind::io, "bad_metrics", side.string() + ": malformed line for record " + std::to_string(line_no));
      }
      r.sample.id = m["id"].get<std::uint64_t>();
      r.sample.source = m["source"].get<std::string>();
      if (const auto it = m.find("lang"); it != m.end() && it->is_object()) {
        for (const auto& [code, v] : it->items()) r.scores.lang[code] = v.get<double>();
      }
      r.scores.ppl = read_optional(m, "ppl");
      r.scores.ifd_base = read_optional(m, "ifd_base");
      r.scores.ifd_tuned = read_optional(m, "ifd_tuned");
      if (const auto it = m.find("token_count"); it != m.end() && it->is_number_integer()) {
        r.scores.token_count = it->get<std::int64_t>();
      }
    } else {
      r.sample.id = out.size();
      r.sample.source = path.stem().string();
    }
    out.push_back(std::move(r));
  }
  if (has_side && std::getline(side_in, meta) && !meta.empty()) {
    throw Error(ErrorKind::io, "bad_metrics", side.string() + " has more lines than " + path.string());
  }
  return out;
}

}  // namespace mixdown
