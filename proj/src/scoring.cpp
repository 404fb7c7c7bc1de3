#include "mixdown/scoring.hpp"

#include <cmath>

#include "json.hpp"
#include "mixdown/error.hpp"
#include "mixdown/hash.hpp"
#include "mixdown/remote.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

std::vector<LogprobResult> ScorerProvider::score_batch(std::span<const ScoreRequest> requests) {
  std::vector<LogprobResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(score(r));
  return out;
}

LogprobResult MockScorer::score(const ScoreRequest& request) {
  constexpr std::size_t kWindow = 8;
  std::vector<std::string_view> window;
  for (const auto ch : text::split_chars(request.context)) {
    window.push_back(ch);
    if (window.size() > kWindow) window.erase(window.begin());
  }

  LogprobResult out;
  std::string key;
  for (const auto tok : text::split_chars(request.continuation)) {
    key = salt_;
    for (const auto c : window) key.append(c);
    key += '|';
    key.append(tok);
    const auto m = static_cast<double>(fnv1a64(key) % 1000);
    out.tokens.emplace_back(tok);
    out.token_logprobs.push_back(-(1.0 + m / 1000.0));
    window.push_back(tok);
    if (window.size() > kWindow) window.erase(window.begin());
  }
  return out;
}

void check_logprobs(const LogprobResult& r) {
  if (r.tokens.size() != r.token_logprobs.size()) {
    throw Error(ErrorKind::provider, "protocol_error", "tokens and token_logprobs differ in length");
  }
  if (r.tokens.empty()) throw Error(ErrorKind::provider, "protocol_error", "no tokens returned for a non-empty continuation");
  for (const double lp : r.token_logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) throw Error(ErrorKind::provider, "protocol_error", "logprob must be finite and <= 0");
  }
}

ScoreCache::ScoreCache(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  {
    std::ifstream in(file, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      // A torn last line from an interrupted run is simply skipped.
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;
      try {
        LogprobResult r{j.at("tokens").get<std::vector<std::string>>(), j.at("token_logprobs").get<std::vector<double>>()};
        entries_[j.at("key").get<std::string>()] = std::move(r);
      } catch (const nlohmann::json::exception&) {
        continue;
      }
    }
  }
  bool torn = false;
  if (std::filesystem::exists(file) && std::filesystem::file_size(file) > 0) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    in.seekg(-1, std::ios::end);
    torn = in.get() != '\n';
  }
  log_.open(file, std::ios::binary | std::ios::app);
  if (!log_) throw Error(ErrorKind::io, "cache_unwritable", "cannot open score cache " + file.string());
  if (torn) log_ << '\n' << std::flush;
}

std::string ScoreCache::key(std::string_view descriptor, const ScoreRequest& request) {
  std::string material(descriptor);
  material += '\x1f';
  material += to_hex(md5(request.context));
  material += to_hex(md5(request.continuation));
  return to_hex(md5(material));
}

std::optional<LogprobResult> ScoreCache::find(const std::string& key) const {
  std::shared_lock lock(mu_);
  if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void ScoreCache::insert(const std::string& key, const LogprobResult& result) {
  {
    std::unique_lock lock(mu_);
    if (!entries_.emplace(key, result).second) return;
  }
  if (log_.is_open()) {
    nlohmann::ordered_json j;
    j["key"] = key;
    j["tokens"] = result.tokens;
    j["token_logprobs"] = result.token_logprobs;
    std::lock_guard lock(log_mu_);
    log_ << j.dump() << '\n';
    log_.flush();
  }
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

LogprobResult CachedScorer::score(const ScoreRequest& request) {
  return std::move(score_batch(std::span<const ScoreRequest>(&request, 1)).front());
}

std::vector<LogprobResult> CachedScorer::score_batch(std::span<const ScoreRequest> requests) {
  const std::string desc = inner_.descriptor();
  std::vector<LogprobResult> out(requests.size());
  std::vector<std::string> keys(requests.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    keys[i] = ScoreCache::key(desc, requests[i]);
    if (auto hit = cache_.find(keys[i])) out[i] = std::move(*hit);
    else missing.push_back(i);
  }
  if (missing.empty()) return out;

  std::vector<ScoreRequest> pending;
  pending.reserve(missing.size());
  for (const auto i : missing) pending.push_back(requests[i]);
  auto fresh = inner_.score_batch(pending);
  if (fresh.size() != pending.size()) throw Error(ErrorKind::provider, "protocol_error", "batch response has wrong length");
  for (std::size_t j = 0; j < missing.size(); ++j) {
    check_logprobs(fresh[j]);
    cache_.insert(keys[missing[j]], fresh[j]);
    out[missing[j]] = std::move(fresh[j]);
  }
  return out;
}

std::unique_ptr<ScorerProvider> make_scorer(const ProviderSpec& spec) {
  if (spec.is_mock()) return std::make_unique<MockScorer>(spec.mock_salt());
  return std::make_unique<RemoteScorer>(spec);
}

LogprobResult score_continuation(ScorerProvider& provider, std::string_view context, std::string_view continuation) {
  if (continuation.empty()) {
    throw Error(ErrorKind::data, "precondition_violation", "continuation must not be empty");
  }
  auto r = provider.score(ScoreRequest{std::string(context), std::string(continuation)});
  check_logprobs(r);
  return r;
}

double mean_logprob(const LogprobResult& result) {
  if (result.token_logprobs.empty()) throw Error(ErrorKind::data, "empty_sequence", "no token logprobs");
  double sum = 0.0;
  for (const double lp : result.token_logprobs) sum += lp;
  return sum / static_cast<double>(result.token_logprobs.size());
}

std::string ppl_text(const Sample& sample, PplScope scope) {
  return scope == PplScope::full ? rendered_text(sample) : prompt_text(sample);
}

double compute_ppl(ScorerProvider& provider, const Sample& sample, PplScope scope) {
  const std::string t = ppl_text(sample, scope);
  if (t.empty()) throw Error(ErrorKind::data, "empty_sequence", "nothing to score for perplexity");
  return perplexity_from_mean(mean_logprob(score_continuation(provider, "", t)));
}

double ifd_ratio(double conditional_mean, double direct_mean) {
  if (direct_mean == 0.0) {
    throw Error(ErrorKind::data, "degenerate_answer", "answer has probability 1 without the instruction");
  }
  return conditional_mean / direct_mean;
}

double compute_ifd(ScorerProvider& provider, const Sample& sample) {
  if (sample.output.empty()) throw Error(ErrorKind::data, "empty_sequence", "answer is empty");
  const double conditional = mean_logprob(score_continuation(provider, prompt_text(sample), sample.output));
  const double direct = mean_logprob(score_continuation(provider, "", sample.output));
  return ifd_ratio(conditional, direct);
}

double ifd_vote_deviation(double ifd_base, double ifd_tuned) {
  if (!(ifd_base > 0.0)) throw Error(ErrorKind::data, "degenerate_answer", "base IFD must be positive");
  return std::abs(ifd_tuned - ifd_base) / ifd_base;
}

}  // namespace mixdown
