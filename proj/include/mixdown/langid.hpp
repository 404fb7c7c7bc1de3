#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixdown {

// Character-trigram language model: L2-normalized trigram frequencies.
// Trigrams are taken over Unicode characters after ASCII case folding and
// mapping ASCII whitespace to ' '; every Han ideograph counts as the same
// character. CJK is not segmented.
struct LanguageProfile {
  std::string code;
  std::map<std::string, double> trigram_weights;
};

using TrigramVector = std::map<std::string, double>;

// L2-normalized trigram frequency vector of text; empty when text has fewer
// than 3 characters.
TrigramVector trigram_vector(std::string_view text);

// Throws Error{"insufficient_corpus"} for corpora under 1000 characters.
LanguageProfile train_profile(std::string code, std::string_view corpus);

// confidence(code) = max(0, cosine(text, profile)), clamped to [0,1].
// Texts shorter than 3 characters score 0 everywhere.
std::map<std::string, double> score_languages(std::string_view text, std::span<const LanguageProfile> profiles);
std::map<std::string, double> score_languages(const TrigramVector& text_vector,
                                              std::span<const LanguageProfile> profiles);

// Profile file: {"code": str, "trigrams": {trigram: weight}}.
LanguageProfile load_profile(const std::filesystem::path& path);
void save_profile(const LanguageProfile& profile, const std::filesystem::path& path);

// Profiles trained from the bundled en/zh corpora.
const std::vector<LanguageProfile>& default_profiles();

// code -> .json profile or plain-text corpus to train from.
std::vector<LanguageProfile> load_profiles(const std::map<std::string, std::filesystem::path>& sources);

}  // namespace mixdown
