#include "mixdown/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mixdown/error.hpp"

namespace mixdown {

namespace fs = std::filesystem;

Histogram histogram(std::string metric, std::span<const double> values, std::vector<double> edges) {
  if (edges.size() < 2) throw Error(ErrorKind::data, "invalid_bins", "need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i - 1] < edges[i])) throw Error(ErrorKind::data, "invalid_bins", "bin edges must be strictly increasing");
  }
  Histogram h;
  h.metric = std::move(metric);
  h.counts.assign(edges.size() - 1, 0);
  for (const double v : values) {
    if (v < edges.front()) {
      ++h.underflow;
    } else if (v > edges.back() || std::isnan(v)) {
      ++h.overflow;
    } else if (v == edges.back()) {
      ++h.counts.back();
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), v);
      ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  h.edges = std::move(edges);
  return h;
}

std::vector<double> linear_edges(double lo, double hi, double step) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  std::vector<double> e(n + 1);
  for (std::size_t i = 0; i <= n; ++i) e[i] = lo + static_cast<double>(i) * step;
  e.back() = hi;
  return e;
}

std::vector<double> log_edges(double lo, double hi, std::size_t bins) {
  const double a = std::log10(lo), b = std::log10(hi);
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(bins));
  e.front() = lo;
  e.back() = hi;
  return e;
}

std::vector<double> length_edges() { return linear_edges(0, 2500, 50); }
std::vector<double> lang_edges() { return linear_edges(0, 1, 0.05); }
std::vector<double> ppl_edges() { return log_edges(1, 1e4, 20); }
std::vector<double> ifd_edges() { return linear_edges(0, 1.5, 0.05); }

std::vector<Histogram> stage_histograms(std::span<const Record> records) {
  std::vector<double> length, tokens, ppl, ifd_base, ifd_tuned;
  std::map<std::string, std::vector<double>> lang;
  for (const auto& r : records) {
    length.push_back(static_cast<double>(r.scores.text_length));
    tokens.push_back(static_cast<double>(r.scores.token_count));
    for (const auto& [code, s] : r.scores.lang) lang[code].push_back(s);
    if (r.scores.ppl) ppl.push_back(*r.scores.ppl);
    if (r.scores.ifd_base) ifd_base.push_back(*r.scores.ifd_base);
    if (r.scores.ifd_tuned) ifd_tuned.push_back(*r.scores.ifd_tuned);
  }
  std::vector<Histogram> out;
  out.push_back(histogram("text_length", length, length_edges()));
  out.push_back(histogram("token_count", tokens, length_edges()));
  for (const auto& [code, v] : lang) out.push_back(histogram("lang_" + code, v, lang_edges()));
  if (!ppl.empty()) out.push_back(histogram("ppl", ppl, ppl_edges()));
  if (!ifd_base.empty()) out.push_back(histogram("ifd_base", ifd_base, ifd_edges()));
  if (!ifd_tuned.empty()) out.push_back(histogram("ifd_tuned", ifd_tuned, ifd_edges()));
  return out;
}

std::map<std::string, MixtureRow> mixture_table(std::span<const Record> records) {
  struct Acc {
    MixtureRow row;
    double ifd_sum = 0.0, ppl_sum = 0.0;
    std::int64_t ifd_n = 0, ppl_n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.sample.source];
    ++a.row.count;
    a.row.tokens += r.scores.token_count;
    if (r.scores.ifd_base) {
      a.ifd_sum += *r.scores.ifd_base;
      ++a.ifd_n;
    }
    if (r.scores.ppl) {
      a.ppl_sum += *r.scores.ppl;
      ++a.ppl_n;
    }
  }
  std::map<std::string, MixtureRow> out;
  for (auto& [src, a] : acc) {
    if (a.ifd_n > 0) a.row.mean_ifd = a.ifd_sum / static_cast<double>(a.ifd_n);
    if (a.ppl_n > 0) a.row.mean_ppl = a.ppl_sum / static_cast<double>(a.ppl_n);
    out[src] = a.row;
  }
  return out;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "write_failure", "cannot write " + path.string());
  return out;
}

}  // namespace

void write_hist_csv(const fs::path& path, std::span<const Histogram> histograms) {
  auto out = open_out(path);
  out << "metric,bin_lo,bin_hi,count\n";
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (const auto& h : histograms) {
    out << h.metric << ',' << format_number(-inf) << ',' << format_number(h.edges.front()) << ',' << h.underflow << '\n';
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << h.metric << ',' << format_number(h.edges[i]) << ',' << format_number(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
    }
    out << h.metric << ',' << format_number(h.edges.back()) << ',' << format_number(inf) << ',' << h.overflow << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write_failure", "short write to " + path.string());
}

void write_mixture_csv(const fs::path& path, const std::map<std::string, MixtureRow>& table) {
  auto out = open_out(path);
  out << "source,count,tokens,mean_ifd,mean_ppl\n";
  for (const auto& [src, row] : table) {
    out << src << ',' << row.count << ',' << row.tokens << ',' << (row.mean_ifd ? format_number(*row.mean_ifd) : "")
        << ',' << (row.mean_ppl ? format_number(*row.mean_ppl) : "") << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write_failure", "short write to " + path.string());
}

nlohmann::ordered_json report_json(const StageReport& r) {
  nlohmann::ordered_json j;
  j["stage_name"] = r.stage;
  j["input_count"] = r.input_count;
  j["output_count"] = r.output_count;
  j["rejection_counts"] = r.rejections;
  nlohmann::ordered_json hists = nlohmann::ordered_json::array();
  for (const auto& h : r.histograms) {
    nlohmann::ordered_json hj;
    hj["metric"] = h.metric;
    hj["bin_edges"] = h.edges;
    hj["bin_counts"] = h.counts;
    hj["underflow"] = h.underflow;
    hj["overflow"] = h.overflow;
    hists.push_back(std::move(hj));
  }
  j["histograms"] = std::move(hists);
  for (const auto& [k, v] : r.extras.items()) j[k] = v;
  return j;
}

void merge_reports(const fs::path& path, std::span<const StageReport> reports, const nlohmann::json& recipe_summary) {
  nlohmann::ordered_json doc;
  if (fs::is_regular_file(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    doc = nlohmann::ordered_json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) doc = nlohmann::ordered_json::object();
  }
  if (!doc.contains("stages") || !doc["stages"].is_array()) doc["stages"] = nlohmann::ordered_json::array();
  doc["recipe"] = recipe_summary;
  auto& stages = doc["stages"];
  for (const auto& r : reports) {
    auto entry = report_json(r);
    bool replaced = false;
    for (auto& existing : stages) {
      if (existing.value("stage_name", "") == r.stage) {
        existing = entry;
        replaced = true;
        break;
      }
    }
    if (!replaced) stages.push_back(std::move(entry));
  }
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write_failure", "short write to " + path.string());
}

}  // namespace mixdown
