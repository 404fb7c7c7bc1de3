#include <cmath>
#include <thread>

#include "doctest.h"
#include "mixdown/error.hpp"
#include "mixdown/hash.hpp"
#include "mixdown/scoring.hpp"
#include "support.hpp"

using namespace mixdown;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "no error";
}

// Multiplies every logprob of the wrapped provider by a constant.
class Scaled final : public ScorerProvider {
 public:
  Scaled(ScorerProvider& inner, double c) : inner_(inner), c_(c) {}
  std::string descriptor() const override { return "scaled"; }
  LogprobResult score(const ScoreRequest& r) override {
    auto out = inner_.score(r);
    for (double& v : out.token_logprobs) v *= c_;
    return out;
  }

 private:
  ScorerProvider& inner_;
  double c_;
};

class Counting final : public ScorerProvider {
 public:
  std::string descriptor() const override { return "mock"; }
  LogprobResult score(const ScoreRequest& r) override {
    ++calls;
    return mock.score(r);
  }
  std::atomic<int> calls{0};
  MockScorer mock;
};

class Fixed final : public ScorerProvider {
 public:
  explicit Fixed(LogprobResult r) : r_(std::move(r)) {}
  std::string descriptor() const override { return "fixed"; }
  LogprobResult score(const ScoreRequest&) override { return r_; }

 private:
  LogprobResult r_;
};

}  // namespace

TEST_CASE("mock formula on a hand-checked continuation") {
  // FNV-1a-64("|a") mod 1000 = 870, FNV-1a-64("a|b") mod 1000 = 758.
  MockScorer mock;
  const auto r = score_continuation(mock, "", "ab");
  CHECK(r.tokens == std::vector<std::string>{"a", "b"});
  REQUIRE(r.token_logprobs.size() == 2);
  CHECK(r.token_logprobs[0] == -(1.0 + 870.0 / 1000.0));
  CHECK(r.token_logprobs[1] == -(1.0 + 758.0 / 1000.0));
}

TEST_CASE("mock uses the last eight characters of context") {
  MockScorer mock;
  const auto a = score_continuation(mock, "0123456789", "x");
  const auto b = score_continuation(mock, "zz23456789", "x");
  const auto c = score_continuation(mock, "0123456788", "x");
  CHECK(a == b);
  CHECK(a.token_logprobs != c.token_logprobs);
  const auto expected = -(1.0 + static_cast<double>(fnv1a64("23456789|x") % 1000) / 1000.0);
  CHECK(a.token_logprobs[0] == expected);
}

TEST_CASE("mock range, determinism and salt") {
  MockScorer mock, tuned("tuned");
  const auto r = score_continuation(mock, "context", "数据 and text 😀");
  CHECK(r.tokens.size() == 13);
  for (const double v : r.token_logprobs) {
    CHECK(v <= -1.0);
    CHECK(v >= -2.0);
  }
  CHECK(r == score_continuation(mock, "context", "数据 and text 😀"));
  // Salted key is "tuned" + context + "|" + token.
  CHECK(score_continuation(tuned, "", "a").token_logprobs[0] == -(1.0 + 606.0 / 1000.0));
  CHECK(tuned.descriptor() == "mock:tuned");
}

TEST_CASE("empty continuation is a precondition violation") {
  MockScorer mock;
  CHECK(error_code([&] { score_continuation(mock, "x", ""); }) == "precondition_violation");
}

TEST_CASE("mean logprob") {
  CHECK(mean_logprob({{"a", "b"}, {-1.0, -3.0}}) == -2.0);
  CHECK(mean_logprob({{"a"}, {-2.5}}) == -2.5);
  CHECK(mean_logprob({{"a", "b"}, {0.0, 0.0}}) == 0.0);
  CHECK(error_code([] { mean_logprob({}); }) == "empty_sequence");
}

TEST_CASE("perplexity") {
  CHECK(perplexity_from_mean(-3.0) == doctest::Approx(20.085536923187668).epsilon(1e-15));
  CHECK(perplexity_from_mean(0.0) == 1.0);
}

TEST_CASE("ppl and ifd match the reference script") {
  // Frozen from tests/oracles/mixdown_ref.py vectors.
  struct Case {
    Sample s;
    double ppl, ifd, ifd_tuned;
  };
  const Case cases[] = {
      {{0, "s", "Name a color.", "", "Blue"}, 4.351893819273434, 1.0787374851518752, 1.0487041224560794},
      {{0, "s", "Translate to French", "good morning", "bonjour"}, 4.698413976698137, 0.9225352112676057,
       1.2832489645651175},
      {{0, "s", "计算", "2+3", "等于5"}, 4.14789094899002, 1.1322409416108932, 1.0616001888128392},
  };
  MockScorer mock, tuned("tuned");
  for (const auto& c : cases) {
    CHECK(compute_ppl(mock, c.s, PplScope::full) == doctest::Approx(c.ppl).epsilon(1e-12));
    CHECK(compute_ifd(mock, c.s) == doctest::Approx(c.ifd).epsilon(1e-12));
    CHECK(compute_ifd(tuned, c.s) == doctest::Approx(c.ifd_tuned).epsilon(1e-12));
    CHECK(compute_ppl(mock, c.s, PplScope::full) >= 1.0);
  }
  CHECK(compute_ppl(mock, cases[0].s, PplScope::prompt) ==
        perplexity_from_mean(mean_logprob(score_continuation(mock, "", "Name a color."))));
}

TEST_CASE("ifd ratio") {
  CHECK(ifd_ratio(-1.0, -2.0) == 0.5);
  CHECK(ifd_ratio(-2.0, -2.0) == 1.0);
  CHECK(error_code([] { ifd_ratio(-1.0, 0.0); }) == "degenerate_answer");
  Fixed certain({{"a"}, {0.0}});
  CHECK(error_code([&] { compute_ifd(certain, {0, "s", "q", "", "a"}); }) == "degenerate_answer");
}

TEST_CASE("ifd is invariant to scaling logprobs") {
  MockScorer mock;
  const Sample s{0, "s", "Describe the weather today.", "", "sunny"};
  const double base = compute_ifd(mock, s);
  for (const double c : {0.5, 2.0, 7.25}) {
    Scaled scaled(mock, c);
    CHECK(compute_ifd(scaled, s) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("vote deviation") {
  CHECK(ifd_vote_deviation(0.5, 0.5) == 0.0);
  CHECK(ifd_vote_deviation(0.5, 0.80) == doctest::Approx(0.6));
  CHECK(ifd_vote_deviation(0.8, 0.4) == 0.5);
  CHECK(ifd_vote_deviation(0.4, 0.8) == 1.0);  // normalized by base, so not symmetric
  CHECK(error_code([] { ifd_vote_deviation(0.0, 0.5); }) == "degenerate_answer");
}

TEST_CASE("protocol checks on provider results") {
  Fixed mismatched({{"a", "b"}, {-1.0}});
  CHECK(error_code([&] { score_continuation(mismatched, "", "ab"); }) == "protocol_error");
  Fixed positive({{"a"}, {0.5}});
  CHECK(error_code([&] { score_continuation(positive, "", "a"); }) == "protocol_error");
  Fixed nan({{"a"}, {std::nan("")}});
  CHECK(error_code([&] { score_continuation(nan, "", "a"); }) == "protocol_error");
}

TEST_CASE("cache key separates descriptor, context and continuation") {
  const auto k1 = ScoreCache::key("mock", {"ab", "c"});
  CHECK(k1 != ScoreCache::key("mock", {"a", "bc"}));
  CHECK(k1 != ScoreCache::key("mock:t", {"ab", "c"}));
  CHECK(k1 == ScoreCache::key("mock", {"ab", "c"}));
  CHECK(k1.size() == 32);
}

TEST_CASE("cached scorer queries each request once") {
  Counting inner;
  ScoreCache cache;
  CachedScorer cached(inner, cache);
  const ScoreRequest req{"ctx", "answer"};
  const auto a = cached.score(req);
  const auto b = cached.score(req);
  CHECK(a == b);
  CHECK(inner.calls == 1);
  const std::vector<ScoreRequest> batch{req, {"", "answer"}, {"", "answer"}};
  const auto results = cached.score_batch(batch);
  CHECK(results.size() == 3);
  CHECK(results[0] == a);
  CHECK(results[1] == results[2]);
  CHECK(inner.calls <= 3);
  CHECK(cache.size() == 2);
}

TEST_CASE("cache file persists and survives a torn tail") {
  testing::TempDir dir;
  const auto file = dir / "logprobs.jsonl";
  MockScorer mock;
  {
    ScoreCache cache(file);
    CachedScorer cached(mock, cache);
    cached.score({"a", "b"});
    cached.score({"c", "d"});
  }
  {
    std::ofstream out(file, std::ios::app | std::ios::binary);
    out << "{\"key\":\"deadbeef\",\"tok";  // simulated crash mid-write
  }
  ScoreCache reloaded(file);
  CHECK(reloaded.size() == 2);
  Counting counting;
  CachedScorer cached(counting, reloaded);
  CHECK(cached.score({"a", "b"}) == mock.score({"a", "b"}));
  CHECK(counting.calls == 0);
  cached.score({"e", "f"});
  CHECK(counting.calls == 1);
  CHECK(ScoreCache(file).size() == 3);
}

TEST_CASE("cache tolerates concurrent writers") {
  ScoreCache cache;
  Counting inner;
  CachedScorer cached(inner, cache);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) cached.score({"", "text " + std::to_string((i * 7 + t) % 100)});
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 100);
}

TEST_CASE("provider factory") {
  CHECK(make_scorer({.url = "mock"})->descriptor() == "mock");
  CHECK(make_scorer({.url = "mock:abc"})->descriptor() == "mock:abc");
  CHECK(make_scorer({.url = "http://127.0.0.1:1"})->descriptor() == "http://127.0.0.1:1");
}
