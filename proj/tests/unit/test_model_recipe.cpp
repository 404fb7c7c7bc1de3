#include <cstdlib>

#include "doctest.h"
#include "mixdown/error.hpp"
#include "mixdown/recipe.hpp"
#include "support.hpp"

using namespace mixdown;
using testing::kSourceDir;

TEST_CASE("rendered_text canonical form") {
  CHECK(rendered_text({0, "s", "a", "b", "c"}) == "a\nb\nc");
  CHECK(rendered_text({0, "s", "a", "", "c"}) == "a\nc");
  const Sample x{1, "s", "q", "i", "o"}, y{2, "t", "q", "i", "o"};
  CHECK(rendered_text(x) == rendered_text(y));
}

TEST_CASE("prompt_text is instruction plus input") {
  CHECK(prompt_text({0, "s", "a", "b", "c"}) == "a\nb");
  CHECK(prompt_text({0, "s", "a", "", "c"}) == "a");
}

TEST_CASE("basic scores") {
  const auto q = basic_scores({0, "s", "数据", "", "abc def"});
  CHECK(q.text_length == 10);
  CHECK(q.token_count == 4);
  CHECK_FALSE(q.ppl.has_value());
}

TEST_CASE("top language prefers the smaller code on ties") {
  QualityScores q;
  CHECK_FALSE(top_language(q).has_value());
  q.lang = {{"en", 0.4}, {"zh", 0.4}};
  CHECK(*top_language(q) == "en");
  q.lang["zh"] = 0.41;
  CHECK(*top_language(q) == "zh");
}

TEST_CASE("stage report conservation") {
  StageReport r;
  r.input_count = 10;
  r.output_count = 7;
  r.reject("too_short", 2);
  CHECK_FALSE(r.conserved());
  r.reject("language");
  CHECK(r.conserved());
  CHECK(r.rejected_total() == 3);
}

TEST_CASE("recipe defaults are the competition values") {
  const Recipe r;
  CHECK(r.length_min == 20);
  CHECK(r.length_max == 2000);
  CHECK(r.lang_threshold == 0.2);
  CHECK(r.lang_allowed == std::set<std::string>{"en", "zh"});
  CHECK(r.ppl_min == 20.0);
  CHECK(r.ppl_max == 1000.0);
  CHECK(r.ifd_min == 0.2);
  CHECK(r.ifd_max == 0.9);
  CHECK(r.vote_max_deviation == 0.5);
  CHECK(r.quota_target == 70000);
  CHECK(r.token_budget == 10'000'000);
  CHECK(r.seed == 0);
  CHECK(r.banned_words.empty());
  REQUIRE(r.kcenter_reductions.size() == 1);
  CHECK(r.kcenter_reductions[0].lang == "zh");
  CHECK(r.kcenter_reductions[0].target == 9000);
  CHECK(validate(r).empty());
}

TEST_CASE("shipped default recipe") {
  const Recipe r = load_recipe(kSourceDir / "recipes" / "default.toml");
  const Recipe d;
  CHECK(r.length_min == d.length_min);
  CHECK(r.length_max == d.length_max);
  CHECK(r.lang_threshold == d.lang_threshold);
  CHECK(r.ppl_min == d.ppl_min);
  CHECK(r.ppl_max == d.ppl_max);
  CHECK(r.ifd_min == d.ifd_min);
  CHECK(r.ifd_max == d.ifd_max);
  CHECK(r.vote_max_deviation == d.vote_max_deviation);
  CHECK(r.quota_target == d.quota_target);
  CHECK(r.token_budget == d.token_budget);
  CHECK(r.vote_enabled);
  CHECK(r.scorer_tuned.url == "mock:tuned");
  CHECK(r.training["learning_rate"].get<double>() == 1e-3);
  CHECK(r.training["epochs"].get<int>() == 3);
  CHECK(r.training["precision"].get<std::string>() == "bfloat16");
}

namespace {

std::string config_error(std::string_view toml) {
  try {
    parse_recipe(toml, ".");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("invalid recipes report every problem at once") {
  const auto msg = config_error(R"(
ifd_min = 0.9
ifd_max = 0.2
ppl_min = 5.0
ppl_max = 1.0
bogus_key = 1
lang_threshold = "high"
)");
  CHECK(msg.find("ifd_min must be < ifd_max") != std::string::npos);
  CHECK(msg.find("ppl_min must be < ppl_max") != std::string::npos);
  CHECK(msg.find("bogus_key") != std::string::npos);
  CHECK(msg.find("lang_threshold") != std::string::npos);
}

TEST_CASE("recipe invariants") {
  CHECK(config_error("ifd_min = 0.0").find("ifd_min must be > 0") != std::string::npos);
  CHECK(config_error("length_min = 50\nlength_max = 50").find("length_min") != std::string::npos);
  CHECK(config_error("lang_threshold = 1.5").find("lang_threshold") != std::string::npos);
  CHECK(config_error("vote_max_deviation = 0").find("vote_max_deviation") != std::string::npos);
  CHECK(config_error("token_budget = 0").find("token_budget") != std::string::npos);
  CHECK(config_error("vote_enabled = true").find("scorer_tuned") != std::string::npos);
  CHECK(config_error("[scorer_base]\nurl = \"ftp://x\"").find("scorer_base.url") != std::string::npos);
  CHECK(config_error("[embedder]\ncolour = 1").find("embedder.colour") != std::string::npos);
  CHECK(config_error("not toml [").find("line") != std::string::npos);
  CHECK(config_error("lang_allowed = [\"fr\"]").find("'fr'") != std::string::npos);
}

TEST_CASE("recipe parsing details") {
  const Recipe r = parse_recipe(R"(
scorer_base = "http://127.0.0.1:9000"
scorer_tuned = "mock:ft"
ppl_scope = "prompt"
quota_overrides = { a = 10, b = 0 }
kcenter_reductions = []

[[sources]]
name = "a"
path = "data/a.jsonl"

[[sources]]
name = "b"
path = "/abs/b.jsonl"
)",
                                "/base/dir");
  CHECK(r.scorer_base.url == "http://127.0.0.1:9000");
  CHECK(r.vote_enabled);  // defaults on when a tuned scorer is configured
  CHECK(r.ppl_scope == PplScope::prompt);
  CHECK(r.quota_overrides.at("a") == 10);
  CHECK(r.kcenter_reductions.empty());
  REQUIRE(r.sources.size() == 2);
  CHECK(r.sources[0].path == std::filesystem::path("/base/dir/data/a.jsonl"));
  CHECK(r.sources[1].path == std::filesystem::path("/abs/b.jsonl"));
  CHECK(config_error("[[sources]]\nname = \"a\"\npath = \"x\"\n[[sources]]\nname = \"a\"\npath = \"y\"")
            .find("duplicate") != std::string::npos);
}

TEST_CASE("environment overrides endpoints") {
  Recipe r;
  setenv("MIXDOWN_SCORER_URL", "http://10.0.0.1:8000", 1);
  setenv("MIXDOWN_EMBEDDER_URL", "http://10.0.0.2:8001", 1);
  apply_env_overrides(r);
  unsetenv("MIXDOWN_SCORER_URL");
  unsetenv("MIXDOWN_EMBEDDER_URL");
  CHECK(r.scorer_base.url == "http://10.0.0.1:8000");
  CHECK(r.embedder.url == "http://10.0.0.2:8001");
  CHECK_FALSE(r.scorer_tuned.configured());
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorKind::config) == 2);
  CHECK(exit_code_for(ErrorKind::data) == 2);
  CHECK(exit_code_for(ErrorKind::provider) == 3);
  CHECK(exit_code_for(ErrorKind::io) == 4);
}
