#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixdown/embed.hpp"
#include "mixdown/langid.hpp"
#include "mixdown/model.hpp"
#include "mixdown/recipe.hpp"
#include "mixdown/scoring.hpp"

namespace mixdown {

// Stage order of a full run. Each name is also the StageReport name.
inline constexpr std::string_view kStageNames[] = {"ingest", "dedup", "filter_low", "score", "filter_high", "select"};

StageResult stage_ingest(const Recipe& recipe);
StageResult stage_dedup(std::vector<Record> records);
// length -> language -> banned words. Language scores are computed for
// records that do not carry any yet.
StageResult stage_filter_low(std::vector<Record> records, const Recipe& recipe,
                             std::span<const LanguageProfile> profiles);
// PPL, base IFD and (when tuned != nullptr) tuned IFD for every record.
// Requests are batched and dispatched on up to max_in_flight threads.
// Answers the model predicts with certainty are dropped as "degenerate_answer".
StageResult stage_score(std::vector<Record> records, const Recipe& recipe, ScorerProvider& base,
                        ScorerProvider* tuned, int max_in_flight);
// ppl -> ifd -> ifd_vote (when the recipe enables voting).
StageResult stage_filter_high(std::vector<Record> records, const Recipe& recipe);
// Quotas -> per-source IFD selection -> k-center language reductions ->
// token budget -> PPL-descending order.
StageResult stage_select(std::vector<Record> records, const Recipe& recipe, Embedder& embedder);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool use_cache = true;
  std::optional<int> max_in_flight;
  bool report_only = false;
  std::string stop_after;               // empty: run every stage
  std::string output_name = "mixture";  // final dataset is <out_dir>/<output_name>.jsonl
};

// Non-owning providers that replace the ones the recipe would build.
struct ProviderOverrides {
  ScorerProvider* base = nullptr;
  ScorerProvider* tuned = nullptr;
  Embedder* embedder = nullptr;
};

// Providers, caches and language profiles for one run.
class Session {
 public:
  Session(const Recipe& recipe, const RunOptions& options, ProviderOverrides overrides = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ScorerProvider& base_scorer();
  ScorerProvider* tuned_scorer();  // nullptr when voting is disabled
  Embedder& embedder();
  std::span<const LanguageProfile> profiles() const { return profiles_; }
  int max_in_flight() const { return max_in_flight_; }

 private:
  std::unique_ptr<ScorerProvider> owned_base_, owned_tuned_;
  std::unique_ptr<Embedder> owned_embedder_;
  ScorerProvider* base_ = nullptr;
  ScorerProvider* tuned_ = nullptr;
  Embedder* embedder_ = nullptr;
  std::unique_ptr<ScoreCache> cache_;
  std::unique_ptr<CachedScorer> cached_base_, cached_tuned_;
  std::vector<LanguageProfile> profiles_;
  int max_in_flight_ = 1;
};

// Writes <stage>.hist.csv and <stage>.mixture.csv, plus <name>.jsonl (and its
// metrics sidecar) when dataset_name is non-empty.
void emit_stage(const std::filesystem::path& out_dir, const StageResult& result, const std::string& dataset_name);

// Full recipe: ingest -> dedup -> filter_low -> score -> filter_high ->
// select -> write. Reports are merged into <out_dir>/report.json even when a
// stage fails; scorer results persist in <out_dir>/score_cache so a rerun
// resumes without re-querying.
std::vector<StageReport> run_pipeline(const Recipe& recipe, const RunOptions& options,
                                      ProviderOverrides overrides = {});

}  // namespace mixdown
