#include "mixdown/remote.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "mixdown/error.hpp"

namespace mixdown {

namespace {

[[noreturn]] void protocol_error(const std::string& what) { throw Error(ErrorKind::provider, "protocol_error", what); }

}  // namespace

JsonHttpClient::JsonHttpClient(const ProviderSpec& spec, std::string unavailable_code)
    : spec_(spec), unavailable_code_(std::move(unavailable_code)) {
  constexpr std::string_view kScheme = "http://";
  if (!spec.url.starts_with(kScheme)) {
    throw Error(ErrorKind::config, "invalid_endpoint", "endpoint must start with http://: " + spec.url);
  }
  const std::string rest = spec.url.substr(kScheme.size());
  const auto slash = rest.find('/');
  host_port_ = std::string(kScheme) + rest.substr(0, slash);
  if (slash != std::string::npos) {
    base_path_ = rest.substr(slash);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
}

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) const {
  const std::string payload = body.dump();
  const std::string target = base_path_ + path;
  const auto timeout = std::chrono::milliseconds(spec_.timeout_ms);
  std::string last_failure;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50) * (1 << std::min(attempt - 1, 6)));
    httplib::Client cli(host_port_);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    const auto res = cli.Post(target, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) protocol_error(target + " answered HTTP " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) protocol_error(target + " returned a non-JSON-object body");
    return j;
  }
  throw Error(ErrorKind::provider, unavailable_code_,
              spec_.url + target + " failed after " + std::to_string(spec_.max_retries + 1) + " attempt(s): " + last_failure);
}

nlohmann::json to_wire(const ScoreRequest& request) {
  return {{"context", request.context}, {"continuation", request.continuation}};
}

LogprobResult logprobs_from_wire(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j.contains("token_logprobs")) {
    protocol_error("logprob response needs \"tokens\" and \"token_logprobs\"");
  }
  LogprobResult r;
  try {
    r.tokens = j["tokens"].get<std::vector<std::string>>();
    r.token_logprobs = j["token_logprobs"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    protocol_error(std::string("malformed logprob response: ") + e.what());
  }
  check_logprobs(r);
  return r;
}

RemoteScorer::RemoteScorer(const ProviderSpec& spec) : url_(spec.url), client_(spec, "scorer_unavailable") {}

LogprobResult RemoteScorer::score(const ScoreRequest& request) {
  return logprobs_from_wire(client_.post("/v1/logprobs", to_wire(request)));
}

std::vector<LogprobResult> RemoteScorer::score_batch(std::span<const ScoreRequest> requests) {
  if (requests.size() == 1) return {score(requests.front())};
  nlohmann::json items = nlohmann::json::array();
  for (const auto& r : requests) items.push_back(to_wire(r));
  const auto resp = client_.post("/v1/logprobs/batch", {{"items", items}});
  if (!resp.contains("items") || !resp["items"].is_array() || resp["items"].size() != requests.size()) {
    protocol_error("batch response must carry one item per request");
  }
  std::vector<LogprobResult> out;
  out.reserve(requests.size());
  for (const auto& item : resp["items"]) out.push_back(logprobs_from_wire(item));
  return out;
}

RemoteEmbedder::RemoteEmbedder(const ProviderSpec& spec, std::size_t dim)
    : url_(spec.url), dim_(dim), batch_size_(spec.batch_size), client_(spec, "embedder_unavailable") {}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorKind::data, "empty_text", "cannot embed empty text");
  }
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += static_cast<std::size_t>(batch_size_)) {
    const auto chunk = texts.subspan(begin, std::min<std::size_t>(batch_size_, texts.size() - begin));
    const auto resp = client_.post("/v1/embeddings", {{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
    if (!resp.contains("vectors") || !resp["vectors"].is_array() || resp["vectors"].size() != chunk.size()) {
      protocol_error("embedding response must carry one vector per text");
    }
    for (const auto& v : resp["vectors"]) {
      Embedding e;
      try {
        e.values = v.get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        protocol_error("embedding vector is not an array of numbers");
      }
      if (e.values.size() != dim_) protocol_error("embedding has dimension " + std::to_string(e.values.size()) + ", expected " + std::to_string(dim_));
      const double n = e.norm();
      if (!(n > 0.0) || !std::isfinite(n)) protocol_error("zero or non-finite embedding vector");
      for (double& x : e.values) x /= n;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace mixdown
