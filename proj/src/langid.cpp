#include "mixdown/langid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mixdown/error.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

namespace detail {
extern const std::string_view kCorpusEn;
extern const std::string_view kCorpusZh;
}  // namespace detail

namespace {

bool is_han(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
         (cp >= 0x20000 && cp <= 0x2FA1F);
}

// Han ideographs all fold to one symbol: raw ideograph trigrams are too
// sparse for short texts to reach any useful cosine against a profile.
constexpr std::string_view kHanSymbol = "\u4E00";

std::map<std::string, double> trigram_counts(std::string_view text) {
  std::string folded = text::ascii_lower(text);
  for (char& c : folded) {
    if (c == '\n' || c == '\t' || c == '\r' || c == '\v' || c == '\f') c = ' ';
  }
  auto chars = text::split_chars(folded);
  for (auto& ch : chars) {
    if (is_han(text::decode_char(ch))) ch = kHanSymbol;
  }
  std::map<std::string, double> counts;
  for (std::size_t i = 0; i + 2 < chars.size(); ++i) {
    std::string tri;
    tri.reserve(chars[i].size() + chars[i + 1].size() + chars[i + 2].size());
    tri.append(chars[i]).append(chars[i + 1]).append(chars[i + 2]);
    counts[tri] += 1.0;
  }
  return counts;
}

void l2_normalize(std::map<std::string, double>& v) {
  double ss = 0.0;
  for (const auto& [k, w] : v) ss += w * w;
  const double norm = std::sqrt(ss);
  if (norm == 0.0) return;
  for (auto& [k, w] : v) w /= norm;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "missing_profile", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TrigramVector trigram_vector(std::string_view text) {
  auto v = trigram_counts(text);
  l2_normalize(v);
  return v;
}

LanguageProfile train_profile(std::string code, std::string_view corpus) {
  if (text::char_count(corpus) < 1000) {
    throw Error(ErrorKind::data, "insufficient_corpus",
                "profile '" + code + "' needs at least 1000 characters of corpus");
  }
  return LanguageProfile{std::move(code), trigram_vector(corpus)};
}

std::map<std::string, double> score_languages(const TrigramVector& vec, std::span<const LanguageProfile> profiles) {
  std::map<std::string, double> out;
  for (const auto& p : profiles) {
    double dot = 0.0;
    for (const auto& [tri, w] : vec) {
      if (const auto it = p.trigram_weights.find(tri); it != p.trigram_weights.end()) dot += w * it->second;
    }
    out[p.code] = std::clamp(dot, 0.0, 1.0);
  }
  return out;
}

std::map<std::string, double> score_languages(std::string_view text, std::span<const LanguageProfile> profiles) {
  return score_languages(trigram_vector(text), profiles);
}

LanguageProfile load_profile(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("code") || !j.contains("trigrams") ||
      !j["code"].is_string() || !j["trigrams"].is_object()) {
    throw Error(ErrorKind::config, "invalid_profile", path.string() + ": expected {\"code\":str,\"trigrams\":{...}}");
  }
  LanguageProfile p;
  p.code = j["code"].get<std::string>();
  double ss = 0.0;
  for (const auto& [tri, w] : j["trigrams"].items()) {
    const double weight = w.get<double>();
    p.trigram_weights[tri] = weight;
    ss += weight * weight;
  }
  if (p.trigram_weights.empty() || std::abs(ss - 1.0) > 1e-9) {
    throw Error(ErrorKind::config, "invalid_profile", path.string() + ": trigram weights must be non-empty and L2-normalized");
  }
  return p;
}

void save_profile(const LanguageProfile& profile, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["code"] = profile.code;
  j["trigrams"] = profile.trigram_weights;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::io, "write_failure", "cannot write " + path.string());
}

const std::vector<LanguageProfile>& default_profiles() {
  static const std::vector<LanguageProfile> profiles = [] {
    std::vector<LanguageProfile> v;
    v.push_back(train_profile("en", detail::kCorpusEn));
    v.push_back(train_profile("zh", detail::kCorpusZh));
    return v;
  }();
  return profiles;
}

std::vector<LanguageProfile> load_profiles(const std::map<std::string, std::filesystem::path>& sources) {
  std::vector<LanguageProfile> out;
  for (const auto& [code, path] : sources) {
    if (path.extension() == ".json") {
      auto p = load_profile(path);
      if (p.code != code) {
        throw Error(ErrorKind::config, "invalid_profile", path.string() + " holds '" + p.code + "', expected '" + code + "'");
      }
      out.push_back(std::move(p));
    } else {
      out.push_back(train_profile(code, read_file(path)));
    }
  }
  return out;
}

}  // namespace mixdown
