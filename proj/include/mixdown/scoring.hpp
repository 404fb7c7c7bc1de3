#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mixdown/model.hpp"
#include "mixdown/recipe.hpp"

namespace mixdown {

// Per-token natural-log probabilities of a continuation.
struct LogprobResult {
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;

  friend bool operator==(const LogprobResult&, const LogprobResult&) = default;
};

struct ScoreRequest {
  std::string context;       // empty for unconditional scoring
  std::string continuation;  // never empty
};

// Anything that can return token log-probabilities: the built-in mock or a
// remote model. Implementations must be deterministic for identical requests
// and safe to call from several threads at once.
class ScorerProvider {
 public:
  virtual ~ScorerProvider() = default;
  virtual std::string descriptor() const = 0;
  virtual LogprobResult score(const ScoreRequest& request) = 0;
  // Results in request order. The default issues one score() per request.
  virtual std::vector<LogprobResult> score_batch(std::span<const ScoreRequest> requests);
};

// Offline stand-in for a language model. Tokens are single characters and
//   logprob(tok | ctx) = -(1 + (FNV-1a-64(salt + last8(ctx) + "|" + tok) mod 1000) / 1000)
// where ctx grows by each scored token. The salt is empty for "mock" and lets
// "mock:<salt>" act as a second, independent scorer.
class MockScorer final : public ScorerProvider {
 public:
  explicit MockScorer(std::string salt = {}) : salt_(std::move(salt)) {}
  std::string descriptor() const override { return salt_.empty() ? "mock" : "mock:" + salt_; }
  LogprobResult score(const ScoreRequest& request) override;

 private:
  std::string salt_;
};

// Throws Error{"protocol_error"} unless tokens/logprobs have equal non-zero
// length and every logprob is finite and <= 0.
void check_logprobs(const LogprobResult& result);

// Thread-safe memo of provider results keyed by
// MD5(descriptor, MD5(context), MD5(continuation)). With a backing file every
// new entry is appended and flushed immediately, so an aborted run keeps
// whatever it already paid for.
class ScoreCache {
 public:
  ScoreCache() = default;
  explicit ScoreCache(const std::filesystem::path& file);

  static std::string key(std::string_view descriptor, const ScoreRequest& request);

  std::optional<LogprobResult> find(const std::string& key) const;
  void insert(const std::string& key, const LogprobResult& result);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, LogprobResult> entries_;
  std::mutex log_mu_;
  std::ofstream log_;
};

class CachedScorer final : public ScorerProvider {
 public:
  CachedScorer(ScorerProvider& inner, ScoreCache& cache) : inner_(inner), cache_(cache) {}
  std::string descriptor() const override { return inner_.descriptor(); }
  LogprobResult score(const ScoreRequest& request) override;
  std::vector<LogprobResult> score_batch(std::span<const ScoreRequest> requests) override;

 private:
  ScorerProvider& inner_;
  ScoreCache& cache_;
};

std::unique_ptr<ScorerProvider> make_scorer(const ProviderSpec& spec);

// Validated provider call. Empty continuation -> Error{"precondition_violation"}.
LogprobResult score_continuation(ScorerProvider& provider, std::string_view context, std::string_view continuation);

// Arithmetic mean of the token logprobs; Error{"empty_sequence"} when empty.
double mean_logprob(const LogprobResult& result);

inline double perplexity_from_mean(double mean) { return std::exp(-mean); }

std::string ppl_text(const Sample& sample, PplScope scope);

// exp(-mean logprob) of the scoped text, scored with an empty context.
double compute_ppl(ScorerProvider& provider, const Sample& sample, PplScope scope);

// conditional / direct, where conditional = mean logprob of the answer given
// the prompt and direct = mean logprob of the answer alone. A direct mean of
// exactly 0 is Error{"degenerate_answer"}.
double ifd_ratio(double conditional_mean, double direct_mean);

double compute_ifd(ScorerProvider& provider, const Sample& sample);

// |tuned - base| / base. Normalized by the base score, so not symmetric.
double ifd_vote_deviation(double ifd_base, double ifd_tuned);

}  // namespace mixdown
