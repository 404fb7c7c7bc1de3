#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mixdown {

enum class PplScope { full, prompt };

struct SourceSpec {
  std::string name;
  std::filesystem::path path;
};

// Where a scorer or embedder lives. "mock" selects the built-in
// deterministic provider; "mock:<salt>" gives an independent mock variant
// (used to stand in for a second, fine-tuned scorer). Empty = not configured.
struct ProviderSpec {
  std::string url;
  int timeout_ms = 60000;
  int max_in_flight = 8;
  int batch_size = 16;
  int max_retries = 3;

  bool configured() const { return !url.empty(); }
  bool is_mock() const { return url == "mock" || url.starts_with("mock:"); }
  std::string mock_salt() const { return url.size() > 5 ? url.substr(5) : std::string{}; }
};

struct LanguageReduction {
  std::string lang;
  std::int64_t target = 0;
};

// Declarative description of one mixture build. Defaults reproduce the
// published competition recipe.
struct Recipe {
  std::vector<SourceSpec> sources;

  std::int64_t length_min = 20;
  std::int64_t length_max = 2000;

  double lang_threshold = 0.2;
  std::set<std::string> lang_allowed{"en", "zh"};
  // code -> profile JSON or plain-text training corpus; empty = bundled en/zh.
  std::map<std::string, std::filesystem::path> lang_profiles;

  std::vector<std::string> banned_words;

  double ppl_min = 20.0;
  double ppl_max = 1000.0;
  PplScope ppl_scope = PplScope::full;

  double ifd_min = 0.2;
  double ifd_max = 0.9;

  bool vote_enabled = false;
  double vote_max_deviation = 0.5;

  std::int64_t quota_target = 70000;
  // Explicit per-source quotas; when non-empty they replace the IFD-proportional rule.
  std::map<std::string, std::int64_t> quota_overrides;
  std::int64_t token_budget = 10'000'000;
  std::vector<LanguageReduction> kcenter_reductions{{"zh", 9000}};

  ProviderSpec scorer_base{.url = "mock"};
  ProviderSpec scorer_tuned;
  ProviderSpec embedder{.url = "mock"};
  int embed_dim = 256;

  std::uint64_t seed = 0;

  // Training hyper-parameters carried through to report.json; never interpreted.
  nlohmann::json training = nlohmann::json::object();
};

// Every violated invariant, in a stable order. Empty means valid.
std::vector<std::string> validate(const Recipe& recipe);

// Parses TOML text. Relative paths resolve against base_dir. Unknown keys,
// type errors and invariant violations are reported together in a single
// ErrorKind::config exception.
Recipe parse_recipe(std::string_view toml_text, const std::filesystem::path& base_dir);
Recipe load_recipe(const std::filesystem::path& path);

// MIXDOWN_SCORER_URL overrides scorer_base.url, MIXDOWN_EMBEDDER_URL overrides embedder.url.
void apply_env_overrides(Recipe& recipe);

nlohmann::json recipe_summary(const Recipe& recipe);

}  // namespace mixdown
