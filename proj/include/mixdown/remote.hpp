#pragma once

#include <string>

#include "json.hpp"
#include "mixdown/embed.hpp"
#include "mixdown/recipe.hpp"
#include "mixdown/scoring.hpp"

namespace mixdown {

// POSTs JSON to "http://host:port[/prefix]" + path. Transport failures, 5xx
// and 429 are retried up to spec.max_retries times with exponential backoff,
// then reported as Error{unavailable_code}. Other non-200 statuses and
// unparsable bodies are Error{"protocol_error"}.
class JsonHttpClient {
 public:
  JsonHttpClient(const ProviderSpec& spec, std::string unavailable_code);
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

 private:
  ProviderSpec spec_;
  std::string host_port_;
  std::string base_path_;
  std::string unavailable_code_;
};

// Wire protocol:
//   POST /v1/logprobs        {"context","continuation"} -> {"tokens","token_logprobs"}
//   POST /v1/logprobs/batch  {"items":[request...]}     -> {"items":[response...]}
class RemoteScorer final : public ScorerProvider {
 public:
  explicit RemoteScorer(const ProviderSpec& spec);
  std::string descriptor() const override { return url_; }
  LogprobResult score(const ScoreRequest& request) override;
  std::vector<LogprobResult> score_batch(std::span<const ScoreRequest> requests) override;

 private:
  std::string url_;
  JsonHttpClient client_;
};

// POST /v1/embeddings {"texts":[str]} -> {"vectors":[[float]]}. Vectors are
// L2-normalized on receipt; zero vectors and dimension mismatches are
// protocol errors.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(const ProviderSpec& spec, std::size_t dim);
  std::string descriptor() const override { return url_; }
  std::size_t dimension() const override { return dim_; }
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

 private:
  std::string url_;
  std::size_t dim_;
  int batch_size_;
  JsonHttpClient client_;
};

nlohmann::json to_wire(const ScoreRequest& request);
LogprobResult logprobs_from_wire(const nlohmann::json& j);

}  // namespace mixdown
