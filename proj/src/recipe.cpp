#include "mixdown/recipe.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixdown/error.hpp"
#include "toml.hpp"

namespace mixdown {

namespace {

namespace fs = std::filesystem;

// Reads typed keys out of one TOML table and remembers which keys were
// consumed so leftovers can be reported as unknown.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string prefix, const fs::path& base_dir,
              std::vector<std::string>& errors)
      : table_(table), prefix_(std::move(prefix)), base_dir_(base_dir), errors_(errors) {}

  const toml::node* node(std::string_view key) {
    used_.insert(std::string(key));
    return table_.get(key);
  }

  void read(std::string_view key, std::int64_t& out) {
    if (const auto* n = node(key)) {
      if (auto v = n->value_exact<std::int64_t>()) out = *v;
      else type_error(key, "integer");
    }
  }

  void read(std::string_view key, int& out) {
    std::int64_t v = out;
    read(key, v);
    out = static_cast<int>(v);
  }

  void read(std::string_view key, std::uint64_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    read(key, v);
    out = static_cast<std::uint64_t>(v);
  }

  void read(std::string_view key, double& out) {
    if (const auto* n = node(key)) {
      if (n->is_number()) out = *n->value<double>();
      else type_error(key, "number");
    }
  }

  void read(std::string_view key, bool& out) {
    if (const auto* n = node(key)) {
      if (auto v = n->value_exact<bool>()) out = *v;
      else type_error(key, "boolean");
    }
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* n = node(key)) {
      if (auto v = n->value_exact<std::string>()) out = *v;
      else type_error(key, "string");
    }
  }

  void read_path(std::string_view key, fs::path& out) {
    std::string s;
    if (const auto* n = node(key)) {
      if (auto v = n->value_exact<std::string>()) out = resolve(*v);
      else type_error(key, "string");
    }
  }

  void read(std::string_view key, std::vector<std::string>& out) {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) return type_error(key, "array of strings");
      out.clear();
      for (const auto& item : *arr) {
        if (auto v = item.value_exact<std::string>()) out.push_back(*v);
        else return type_error(key, "array of strings");
      }
    }
  }

  void read(std::string_view key, std::set<std::string>& out) {
    if (table_.contains(key)) {
      std::vector<std::string> v;
      read(key, v);
      out = {v.begin(), v.end()};
    }
  }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir_ / path;
  }

  void type_error(std::string_view key, std::string_view expected) {
    errors_.push_back(prefix_ + std::string(key) + ": expected " + std::string(expected));
  }

  void finish() {
    for (const auto& [k, v] : table_) {
      if (!used_.contains(std::string(k.str()))) errors_.push_back("unknown key " + prefix_ + std::string(k.str()));
    }
  }

  const toml::table& table() const { return table_; }
  std::vector<std::string>& errors() { return errors_; }
  const fs::path& base_dir() const { return base_dir_; }

 private:
  const toml::table& table_;
  std::string prefix_;
  fs::path base_dir_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

void read_provider(TableReader& parent, std::string_view key, ProviderSpec& spec) {
  const toml::node* n = parent.node(key);
  if (!n) return;
  if (const auto* url = n->as_string()) {
    spec.url = url->get();
    return;
  }
  const auto* tbl = n->as_table();
  if (!tbl) return parent.type_error(key, "table or string");
  TableReader r(*tbl, std::string(key) + ".", parent.base_dir(), parent.errors());
  r.read("url", spec.url);
  r.read("timeout_ms", spec.timeout_ms);
  r.read("max_in_flight", spec.max_in_flight);
  r.read("batch_size", spec.batch_size);
  r.read("max_retries", spec.max_retries);
  r.finish();
}

nlohmann::json to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(to_json(v));
    return j;
  }
  if (auto v = node.value_exact<std::string>()) return *v;
  if (auto v = node.value_exact<std::int64_t>()) return *v;
  if (auto v = node.value_exact<double>()) return *v;
  if (auto v = node.value_exact<bool>()) return *v;
  std::ostringstream os;
  node.visit([&os](const auto& n) {
    if constexpr (toml::is_date<decltype(n)> || toml::is_time<decltype(n)> || toml::is_date_time<decltype(n)>) os << n;
  });
  return os.str();
}

void validate_provider(const ProviderSpec& p, const std::string& name, std::vector<std::string>& errors) {
  if (!p.configured()) return;
  if (!p.is_mock() && !p.url.starts_with("http://")) errors.push_back(name + ".url must be \"mock\", \"mock:<salt>\" or http://host:port");
  if (p.timeout_ms <= 0) errors.push_back(name + ".timeout_ms must be > 0");
  if (p.max_in_flight < 1) errors.push_back(name + ".max_in_flight must be >= 1");
  if (p.batch_size < 1) errors.push_back(name + ".batch_size must be >= 1");
  if (p.max_retries < 0) errors.push_back(name + ".max_retries must be >= 0");
}

}  // namespace

std::vector<std::string> validate(const Recipe& r) {
  std::vector<std::string> errors;
  std::set<std::string> names;
  for (const auto& s : r.sources) {
    if (s.name.empty()) errors.push_back("sources: empty source name");
    else if (!names.insert(s.name).second) errors.push_back("sources: duplicate source name '" + s.name + "'");
    if (s.path.empty()) errors.push_back("sources: source '" + s.name + "' has no path");
  }
  if (r.length_min < 0) errors.push_back("length_min must be >= 0");
  if (!(r.length_min < r.length_max)) errors.push_back("length_min must be < length_max");
  if (!(r.lang_threshold >= 0.0 && r.lang_threshold <= 1.0)) errors.push_back("lang_threshold must be in [0, 1]");
  if (r.lang_allowed.empty()) errors.push_back("lang_allowed must not be empty");
  const std::set<std::string> bundled{"en", "zh"};
  for (const auto& code : r.lang_allowed) {
    const bool known = r.lang_profiles.empty() ? bundled.contains(code) : r.lang_profiles.contains(code);
    if (!known) errors.push_back("lang_allowed: no profile for language '" + code + "'");
  }
  if (!(r.ppl_min < r.ppl_max)) errors.push_back("ppl_min must be < ppl_max");
  if (!(r.ifd_min > 0.0)) errors.push_back("ifd_min must be > 0");
  if (!(r.ifd_min < r.ifd_max)) errors.push_back("ifd_min must be < ifd_max");
  if (!(r.vote_max_deviation > 0.0)) errors.push_back("vote_max_deviation must be > 0");
  if (r.vote_enabled && !r.scorer_tuned.configured()) errors.push_back("vote_enabled requires scorer_tuned");
  if (r.quota_target <= 0) errors.push_back("quota_target must be > 0");
  for (const auto& [src, q] : r.quota_overrides) {
    if (q < 0) errors.push_back("quota_overrides." + src + " must be >= 0");
  }
  if (r.token_budget <= 0) errors.push_back("token_budget must be > 0");
  for (const auto& red : r.kcenter_reductions) {
    if (red.lang.empty()) errors.push_back("kcenter_reductions: empty lang");
    if (red.target < 1) errors.push_back("kcenter_reductions: target for '" + red.lang + "' must be >= 1");
  }
  if (!r.scorer_base.configured()) errors.push_back("scorer_base must be configured");
  validate_provider(r.scorer_base, "scorer_base", errors);
  validate_provider(r.scorer_tuned, "scorer_tuned", errors);
  validate_provider(r.embedder, "embedder", errors);
  if (r.embed_dim < 1) errors.push_back("embedder.dimension must be >= 1");
  return errors;
}

Recipe parse_recipe(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    throw Error(ErrorKind::config, "invalid_recipe", os.str());
  }

  Recipe r;
  std::vector<std::string> errors;
  TableReader top(root, "", base_dir, errors);

  if (const auto* n = top.node("sources")) {
    const auto* arr = n->as_array();
    if (!arr) {
      top.type_error("sources", "array of tables");
    } else {
      for (const auto& item : *arr) {
        const auto* tbl = item.as_table();
        if (!tbl) {
          top.type_error("sources", "array of tables");
          continue;
        }
        TableReader sr(*tbl, "sources.", base_dir, errors);
        SourceSpec s;
        sr.read("name", s.name);
        sr.read_path("path", s.path);
        sr.finish();
        r.sources.push_back(std::move(s));
      }
    }
  }

  top.read("length_min", r.length_min);
  top.read("length_max", r.length_max);
  top.read("lang_threshold", r.lang_threshold);
  top.read("lang_allowed", r.lang_allowed);
  if (const auto* n = top.node("lang_profiles")) {
    if (const auto* tbl = n->as_table()) {
      TableReader pr(*tbl, "lang_profiles.", base_dir, errors);
      for (const auto& [k, v] : *tbl) pr.read_path(k.str(), r.lang_profiles[std::string(k.str())]);
    } else {
      top.type_error("lang_profiles", "table of code = path");
    }
  }
  top.read("banned_words", r.banned_words);
  top.read("ppl_min", r.ppl_min);
  top.read("ppl_max", r.ppl_max);
  std::string scope;
  top.read("ppl_scope", scope);
  if (scope == "prompt") r.ppl_scope = PplScope::prompt;
  else if (!scope.empty() && scope != "full") errors.push_back("ppl_scope must be \"full\" or \"prompt\"");
  top.read("ifd_min", r.ifd_min);
  top.read("ifd_max", r.ifd_max);
  top.read("vote_max_deviation", r.vote_max_deviation);
  top.read("quota_target", r.quota_target);
  if (const auto* n = top.node("quota_overrides")) {
    if (const auto* tbl = n->as_table()) {
      TableReader qr(*tbl, "quota_overrides.", base_dir, errors);
      for (const auto& [k, v] : *tbl) qr.read(k.str(), r.quota_overrides[std::string(k.str())]);
    } else {
      top.type_error("quota_overrides", "table of source = count");
    }
  }
  top.read("token_budget", r.token_budget);
  if (const auto* n = top.node("kcenter_reductions")) {
    const auto* arr = n->as_array();
    if (!arr) {
      top.type_error("kcenter_reductions", "array of tables");
    } else {
      r.kcenter_reductions.clear();
      for (const auto& item : *arr) {
        const auto* tbl = item.as_table();
        if (!tbl) {
          top.type_error("kcenter_reductions", "array of tables");
          continue;
        }
        TableReader kr(*tbl, "kcenter_reductions.", base_dir, errors);
        LanguageReduction red;
        kr.read("lang", red.lang);
        kr.read("target", red.target);
        kr.finish();
        r.kcenter_reductions.push_back(std::move(red));
      }
    }
  }
  read_provider(top, "scorer_base", r.scorer_base);
  read_provider(top, "scorer_tuned", r.scorer_tuned);

  // The embedder table additionally carries the vector dimension.
  if (const auto* n = top.node("embedder")) {
    if (const auto* url = n->as_string()) {
      r.embedder.url = url->get();
    } else if (const auto* tbl = n->as_table()) {
      TableReader er(*tbl, "embedder.", base_dir, errors);
      er.read("url", r.embedder.url);
      er.read("timeout_ms", r.embedder.timeout_ms);
      er.read("max_in_flight", r.embedder.max_in_flight);
      er.read("batch_size", r.embedder.batch_size);
      er.read("max_retries", r.embedder.max_retries);
      er.read("dimension", r.embed_dim);
      er.finish();
    } else {
      top.type_error("embedder", "table or string");
    }
  }

  r.vote_enabled = r.scorer_tuned.configured();
  top.read("vote_enabled", r.vote_enabled);
  top.read("seed", r.seed);
  if (const auto* n = top.node("training")) {
    if (n->is_table()) r.training = to_json(*n);
    else top.type_error("training", "table");
  }
  top.finish();

  for (auto& e : validate(r)) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorKind::config, "invalid_recipe", std::to_string(errors.size()) + " problem(s):" + msg);
  }
  return r;
}

Recipe load_recipe(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "invalid_recipe", "cannot open recipe " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_recipe(buf.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void apply_env_overrides(Recipe& recipe) {
  if (const char* url = std::getenv("MIXDOWN_SCORER_URL"); url && *url) recipe.scorer_base.url = url;
  if (const char* url = std::getenv("MIXDOWN_EMBEDDER_URL"); url && *url) recipe.embedder.url = url;
}

nlohmann::json recipe_summary(const Recipe& r) {
  nlohmann::json j;
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : r.sources) sources.push_back({{"name", s.name}, {"path", s.path.string()}});
  j["sources"] = sources;
  j["length_min"] = r.length_min;
  j["length_max"] = r.length_max;
  j["lang_threshold"] = r.lang_threshold;
  j["lang_allowed"] = r.lang_allowed;
  j["banned_words"] = r.banned_words;
  j["ppl_min"] = r.ppl_min;
  j["ppl_max"] = r.ppl_max;
  j["ppl_scope"] = r.ppl_scope == PplScope::full ? "full" : "prompt";
  j["ifd_min"] = r.ifd_min;
  j["ifd_max"] = r.ifd_max;
  j["vote_enabled"] = r.vote_enabled;
  j["vote_max_deviation"] = r.vote_max_deviation;
  j["quota_target"] = r.quota_target;
  j["quota_overrides"] = r.quota_overrides;
  j["token_budget"] = r.token_budget;
  nlohmann::json reductions = nlohmann::json::array();
  for (const auto& red : r.kcenter_reductions) reductions.push_back({{"lang", red.lang}, {"target", red.target}});
  j["kcenter_reductions"] = reductions;
  j["scorer_base"] = r.scorer_base.url;
  j["scorer_tuned"] = r.scorer_tuned.url;
  j["embedder"] = r.embedder.url;
  j["embed_dim"] = r.embed_dim;
  j["seed"] = r.seed;
  j["training"] = r.training;
  return j;
}

}  // namespace mixdown
