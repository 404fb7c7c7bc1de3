#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mixdown/model.hpp"

namespace mixdown {

// counts[i] = #{v : edges[i] <= v < edges[i+1]}, the last bin closed on the
// right. Values outside [edges.front(), edges.back()] land in underflow /
// overflow. Edges must be strictly increasing with at least two entries,
// otherwise Error{"invalid_bins"}.
Histogram histogram(std::string metric, std::span<const double> values, std::vector<double> edges);

std::vector<double> linear_edges(double lo, double hi, double step);
std::vector<double> log_edges(double lo, double hi, std::size_t bins);

// Default axes: length 0..2500 by 50, language score 0..1 by 0.05, PPL
// log-spaced 1..1e4 in 20 bins, IFD 0..1.5 by 0.05.
std::vector<double> length_edges();
std::vector<double> lang_edges();
std::vector<double> ppl_edges();
std::vector<double> ifd_edges();

// One histogram per measured metric present on the records.
std::vector<Histogram> stage_histograms(std::span<const Record> records);

struct MixtureRow {
  std::int64_t count = 0;
  std::int64_t tokens = 0;
  std::optional<double> mean_ifd;  // over records that carry the score
  std::optional<double> mean_ppl;
};

std::map<std::string, MixtureRow> mixture_table(std::span<const Record> records);

std::string format_number(double v);

// "<stage>.hist.csv": metric,bin_lo,bin_hi,count (underflow/overflow rows use -inf/inf).
void write_hist_csv(const std::filesystem::path& path, std::span<const Histogram> histograms);
// "<stage>.mixture.csv": source,count,tokens,mean_ifd,mean_ppl
void write_mixture_csv(const std::filesystem::path& path, const std::map<std::string, MixtureRow>& table);

nlohmann::ordered_json report_json(const StageReport& report);

// Upserts the given stage reports (by stage name) into report.json, keeping
// the position of stages already recorded.
void merge_reports(const std::filesystem::path& path, std::span<const StageReport> reports,
                   const nlohmann::json& recipe_summary);

}  // namespace mixdown
