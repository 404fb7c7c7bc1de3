#include "mixdown/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <set>

#include "mixdown/dedup.hpp"
#include "mixdown/error.hpp"
#include "mixdown/filters.hpp"
#include "mixdown/ingest.hpp"
#include "mixdown/kernels.hpp"
#include "mixdown/select.hpp"
#include "mixdown/stats.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

namespace fs = std::filesystem;

namespace {

void finish(StageResult& result, std::int64_t input_count) {
  result.report.input_count = input_count;
  result.report.output_count = static_cast<std::int64_t>(result.records.size());
  result.report.histograms = stage_histograms(result.records);
}

void warn(StageReport& report, const std::string& message) {
  std::cerr << "warning: " << report.stage << ": " << message << '\n';
  report.extras["warnings"].push_back(message);
}

// Splits requests into provider batches and runs them on up to max_in_flight
// threads. Results land by request index, so order is independent of timing.
std::vector<LogprobResult> score_all(ScorerProvider& provider, const std::vector<ScoreRequest>& requests,
                                     int batch_size, int max_in_flight) {
  std::vector<LogprobResult> out(requests.size());
  const std::size_t bs = static_cast<std::size_t>(std::max(batch_size, 1));
  const auto chunks = static_cast<std::ptrdiff_t>((requests.size() + bs - 1) / bs);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  const std::span<const ScoreRequest> all(requests);
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(max_in_flight, 1))
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    if (failed.load(std::memory_order_relaxed)) continue;
    const std::size_t begin = static_cast<std::size_t>(c) * bs;
    const auto chunk = all.subspan(begin, std::min(bs, requests.size() - begin));
    try {
      auto results = provider.score_batch(chunk);
      if (results.size() != chunk.size()) throw Error(ErrorKind::provider, "protocol_error", "batch result has wrong length");
      for (std::size_t i = 0; i < results.size(); ++i) {
        check_logprobs(results[i]);
        out[begin + i] = std::move(results[i]);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
      failed = true;
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void require_field(std::span<const Record> records, const char* stage, const char* field, bool (*has)(const Record&)) {
  for (const auto& r : records) {
    if (!has(r)) {
      throw Error(ErrorKind::config, "missing_field",
                  std::string("stage '") + stage + "' needs field '" + field + "', absent on record " + std::to_string(r.sample.id));
    }
  }
}

}  // namespace

StageResult stage_ingest(const Recipe& recipe) {
  SourceRegistry registry(recipe.sources);
  StageResult result;
  result.report = read_sources(registry, [&](Sample&& s) {
    Record r;
    r.scores = basic_scores(s);
    r.sample = std::move(s);
    result.records.push_back(std::move(r));
  });
  nlohmann::json per_source = nlohmann::json::object();
  for (const auto& e : registry.entries()) per_source[e.name] = e.record_count;
  result.report.extras["source_records"] = per_source;
  result.report.histograms = stage_histograms(result.records);
  return result;
}

StageResult stage_dedup(std::vector<Record> records) {
  auto result = dedup_exact(std::move(records));
  result.report.histograms = stage_histograms(result.records);
  return result;
}

StageResult stage_filter_low(std::vector<Record> records, const Recipe& recipe, std::span<const LanguageProfile> profiles) {
  StageResult result;
  result.report.stage = "filter_low";
  const auto input = static_cast<std::int64_t>(records.size());

  std::vector<std::string> texts(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) texts[i] = rendered_text(records[i].sample);

  std::vector<std::size_t> unscored;
  std::vector<std::string> unscored_texts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].scores.text_length = static_cast<std::int64_t>(text::char_count(texts[i]));
    if (records[i].scores.lang.empty()) {
      unscored.push_back(i);
      unscored_texts.push_back(texts[i]);
    }
  }
  auto lang = kernels::parallel::score_languages_batch(unscored_texts, profiles);
  for (std::size_t j = 0; j < unscored.size(); ++j) records[unscored[j]].scores.lang = std::move(lang[j]);

  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    FilterOutcome o = filter_length(r.scores.text_length, recipe.length_min, recipe.length_max);
    if (o.kept) o = filter_language(r.scores.lang, recipe.lang_threshold, recipe.lang_allowed);
    if (o.kept) o = filter_banned_words(texts[i], recipe.banned_words);
    if (o.kept) result.records.push_back(std::move(r));
    else result.report.reject(o.reason);
  }
  finish(result, input);
  return result;
}

StageResult stage_score(std::vector<Record> records, const Recipe& recipe, ScorerProvider& base, ScorerProvider* tuned,
                        int max_in_flight) {
  StageResult result;
  result.report.stage = "score";
  const auto input = static_cast<std::int64_t>(records.size());

  // Per record: [ppl, conditional answer, direct answer]; tuned adds two more.
  std::vector<ScoreRequest> base_requests;
  std::vector<ScoreRequest> tuned_requests;
  std::vector<char> empty_scope(records.size(), 0);
  base_requests.reserve(records.size() * 3);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& s = records[i].sample;
    std::string scoped = ppl_text(s, recipe.ppl_scope);
    if (scoped.empty()) {
      empty_scope[i] = 1;
      scoped = rendered_text(s);  // placeholder keeps request indexing regular; never used
    }
    base_requests.push_back({"", std::move(scoped)});
    base_requests.push_back({prompt_text(s), s.output});
    base_requests.push_back({"", s.output});
    if (tuned) {
      tuned_requests.push_back({prompt_text(s), s.output});
      tuned_requests.push_back({"", s.output});
    }
  }

  const auto base_results = score_all(base, base_requests, recipe.scorer_base.batch_size, max_in_flight);
  std::vector<LogprobResult> tuned_results;
  if (tuned) tuned_results = score_all(*tuned, tuned_requests, recipe.scorer_tuned.batch_size, max_in_flight);

  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (empty_scope[i]) {
      result.report.reject("empty_sequence");
      continue;
    }
    const auto& ppl_res = base_results[3 * i];
    const double direct = mean_logprob(base_results[3 * i + 2]);
    if (direct == 0.0) {
      result.report.reject("degenerate_answer");
      continue;
    }
    r.scores.ppl = perplexity_from_mean(mean_logprob(ppl_res));
    r.scores.ifd_base = ifd_ratio(mean_logprob(base_results[3 * i + 1]), direct);
    if (recipe.ppl_scope == PplScope::full) {
      r.scores.token_count = static_cast<std::int64_t>(ppl_res.tokens.size());
    } else {
      r.scores.token_count = text::heuristic_token_count(rendered_text(r.sample));
    }
    if (tuned) {
      const double tuned_direct = mean_logprob(tuned_results[2 * i + 1]);
      if (tuned_direct == 0.0) {
        result.report.reject("degenerate_answer");
        continue;
      }
      r.scores.ifd_tuned = ifd_ratio(mean_logprob(tuned_results[2 * i]), tuned_direct);
    }
    result.records.push_back(std::move(r));
  }
  finish(result, input);
  return result;
}

StageResult stage_filter_high(std::vector<Record> records, const Recipe& recipe) {
  StageResult result;
  result.report.stage = "filter_high";
  const auto input = static_cast<std::int64_t>(records.size());
  require_field(records, "filter_high", "ppl", [](const Record& r) { return r.scores.ppl.has_value(); });
  require_field(records, "filter_high", "ifd_base", [](const Record& r) { return r.scores.ifd_base.has_value(); });
  if (recipe.vote_enabled) {
    require_field(records, "filter_high", "ifd_tuned", [](const Record& r) { return r.scores.ifd_tuned.has_value(); });
  }
  for (auto& r : records) {
    FilterOutcome o = filter_ppl(r.scores, recipe.ppl_min, recipe.ppl_max);
    if (o.kept) o = filter_ifd(r.scores, recipe.ifd_min, recipe.ifd_max);
    if (o.kept && recipe.vote_enabled) o = filter_ifd_vote(r.scores, recipe.vote_max_deviation);
    if (o.kept) result.records.push_back(std::move(r));
    else result.report.reject(o.reason);
  }
  finish(result, input);
  return result;
}

StageResult stage_select(std::vector<Record> records, const Recipe& recipe, Embedder& embedder) {
  StageResult result;
  result.report.stage = "select";
  const auto input = static_cast<std::int64_t>(records.size());
  require_field(records, "select", "ppl", [](const Record& r) { return r.scores.ppl.has_value(); });
  require_field(records, "select", "ifd_base", [](const Record& r) { return r.scores.ifd_base.has_value(); });
  if (!recipe.kcenter_reductions.empty()) {
    require_field(records, "select", "lang", [](const Record& r) { return !r.scores.lang.empty(); });
  }
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.sample.id < b.sample.id; });

  // Quotas and per-source IFD selection.
  const auto pools = pool_by_source(records);
  std::map<std::string, std::int64_t> quotas;
  if (recipe.quota_overrides.empty()) {
    quotas = allocate_quotas(pools, recipe.quota_target);
  } else {
    for (const auto& [src, pool] : pools) {
      const auto it = recipe.quota_overrides.find(src);
      quotas[src] = it == recipe.quota_overrides.end() ? 0 : std::min(it->second, pool.size);
    }
  }
  std::map<std::string, std::vector<Record>> by_source;
  for (auto& r : records) by_source[r.sample.source].push_back(std::move(r));
  std::vector<Record> chosen;
  nlohmann::json quota_table = nlohmann::json::object();
  for (auto& [src, group] : by_source) {
    const auto ids = select_by_ifd(group, quotas[src]);
    quota_table[src] = {{"available", pools.at(src).size},
                        {"mean_ifd", pools.at(src).mean_ifd},
                        {"quota", quotas[src]},
                        {"selected", ids.size()}};
    std::size_t k = 0;
    for (auto& r : group) {
      if (k < ids.size() && ids[k] == r.sample.id) {
        chosen.push_back(std::move(r));
        ++k;
      }
    }
  }
  result.report.extras["quota_table"] = quota_table;
  result.report.reject("quota", input - static_cast<std::int64_t>(chosen.size()));

  // k-center greedy reductions per language.
  nlohmann::json radii = nlohmann::json::object();
  for (const auto& red : recipe.kcenter_reductions) {
    const auto before = static_cast<std::int64_t>(chosen.size());
    auto reduced = reduce_language_subset(std::move(chosen), red.lang, red.target, embedder);
    chosen = std::move(reduced.records);
    if (!reduced.warning.empty()) warn(result.report, reduced.warning);
    radii[red.lang] = {{"subset_size", reduced.subset_size},
                       {"kept", reduced.subset_kept},
                       {"applied", reduced.applied},
                       {"radius", reduced.applied ? nlohmann::json(reduced.radius) : nlohmann::json(nullptr)}};
    const auto dropped = before - static_cast<std::int64_t>(chosen.size());
    if (dropped > 0) result.report.reject("kcenter", dropped);
  }
  result.report.extras["kcenter_radius"] = radii;

  // Token budget, then the final emission order.
  const auto before_budget = static_cast<std::int64_t>(chosen.size());
  auto budget = enforce_token_budget(std::move(chosen), recipe.token_budget);
  if (!budget.warning.empty()) warn(result.report, budget.warning);
  const auto evicted = before_budget - static_cast<std::int64_t>(budget.records.size());
  if (evicted > 0) result.report.reject("token_budget", evicted);
  result.report.extras["final_token_total"] = budget.total_tokens;

  result.records = order_by_ppl_desc(std::move(budget.records));
  finish(result, input);
  return result;
}

Session::Session(const Recipe& recipe, const RunOptions& options, ProviderOverrides overrides) {
  max_in_flight_ = options.max_in_flight.value_or(recipe.scorer_base.max_in_flight);

  if (overrides.base) {
    base_ = overrides.base;
  } else {
    owned_base_ = make_scorer(recipe.scorer_base);
    base_ = owned_base_.get();
  }
  if (recipe.vote_enabled) {
    if (overrides.tuned) {
      tuned_ = overrides.tuned;
    } else {
      owned_tuned_ = make_scorer(recipe.scorer_tuned);
      tuned_ = owned_tuned_.get();
    }
  }
  if (overrides.embedder) {
    embedder_ = overrides.embedder;
  } else {
    owned_embedder_ = make_embedder(recipe.embedder, static_cast<std::size_t>(recipe.embed_dim));
    embedder_ = owned_embedder_.get();
  }

  cache_ = options.use_cache ? std::make_unique<ScoreCache>(options.out_dir / "score_cache" / "logprobs.jsonl")
                             : std::make_unique<ScoreCache>();
  cached_base_ = std::make_unique<CachedScorer>(*base_, *cache_);
  if (tuned_) cached_tuned_ = std::make_unique<CachedScorer>(*tuned_, *cache_);

  profiles_ = recipe.lang_profiles.empty() ? default_profiles() : load_profiles(recipe.lang_profiles);
}

Session::~Session() = default;

ScorerProvider& Session::base_scorer() { return *cached_base_; }
ScorerProvider* Session::tuned_scorer() { return cached_tuned_.get(); }
Embedder& Session::embedder() { return *embedder_; }

void emit_stage(const fs::path& out_dir, const StageResult& result, const std::string& dataset_name) {
  const auto& stage = result.report.stage;
  write_hist_csv(out_dir / (stage + ".hist.csv"), result.report.histograms);
  write_mixture_csv(out_dir / (stage + ".mixture.csv"), mixture_table(result.records));
  if (!dataset_name.empty()) write_dataset(result.records, out_dir / (dataset_name + ".jsonl"));
}

std::vector<StageReport> run_pipeline(const Recipe& recipe, const RunOptions& options, ProviderOverrides overrides) {
  if (!options.stop_after.empty() &&
      std::find(std::begin(kStageNames), std::end(kStageNames), options.stop_after) == std::end(kStageNames)) {
    throw Error(ErrorKind::config, "unknown_stage", "no stage named '" + options.stop_after + "'");
  }
  if (recipe.sources.empty()) throw Error(ErrorKind::config, "invalid_recipe", "recipe lists no sources");
  fs::create_directories(options.out_dir);

  Session session(recipe, options, overrides);
  std::vector<StageReport> reports;
  const auto report_path = options.out_dir / "report.json";
  const auto summary = recipe_summary(recipe);
  fs::remove(report_path);

  // Returns true when the run should stop after this stage.
  auto record = [&](const StageResult& result) {
    reports.push_back(result.report);
    const bool last = options.stop_after == result.report.stage || result.report.stage == "select";
    std::string dataset;
    if (last && !options.report_only) dataset = result.report.stage == "select" ? options.output_name : result.report.stage;
    emit_stage(options.out_dir, result, dataset);
    return last;
  };

  try {
    auto r = stage_ingest(recipe);
    if (record(r)) return merge_reports(report_path, reports, summary), reports;
    r = stage_dedup(std::move(r.records));
    if (record(r)) return merge_reports(report_path, reports, summary), reports;
    r = stage_filter_low(std::move(r.records), recipe, session.profiles());
    if (record(r)) return merge_reports(report_path, reports, summary), reports;
    r = stage_score(std::move(r.records), recipe, session.base_scorer(), session.tuned_scorer(), session.max_in_flight());
    if (record(r)) return merge_reports(report_path, reports, summary), reports;
    r = stage_filter_high(std::move(r.records), recipe);
    if (record(r)) return merge_reports(report_path, reports, summary), reports;
    r = stage_select(std::move(r.records), recipe, session.embedder());
    record(r);
  } catch (...) {
    if (!reports.empty()) merge_reports(report_path, reports, summary);
    throw;
  }
  merge_reports(report_path, reports, summary);
  return reports;
}

}  // namespace mixdown
