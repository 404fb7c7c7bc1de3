#include "mixdown/filters.hpp"

#include "mixdown/error.hpp"
#include "mixdown/scoring.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

namespace {

double require(const std::optional<double>& v, const char* name) {
  if (!v) throw Error(ErrorKind::config, "missing_score", std::string("score '") + name + "' is required but absent");
  return *v;
}

}  // namespace

FilterOutcome filter_length(std::int64_t text_length, std::int64_t min, std::int64_t max) {
  if (text_length < min) return FilterOutcome::reject("too_short");
  if (text_length > max) return FilterOutcome::reject("too_long");
  return FilterOutcome::keep();
}

FilterOutcome filter_length(const Sample& sample, std::int64_t min, std::int64_t max) {
  return filter_length(static_cast<std::int64_t>(text::char_count(rendered_text(sample))), min, max);
}

FilterOutcome filter_language(const std::map<std::string, double>& scores, double threshold,
                              const std::set<std::string>& allowed) {
  for (const auto& code : allowed) {
    if (const auto it = scores.find(code); it != scores.end() && it->second > threshold) return FilterOutcome::keep();
  }
  return FilterOutcome::reject("language");
}

FilterOutcome filter_banned_words(std::string_view text, const std::vector<std::string>& banned) {
  if (banned.empty()) return FilterOutcome::keep();
  const std::string haystack = text::ascii_lower(text);
  for (const auto& word : banned) {
    if (word.empty()) continue;
    if (haystack.find(text::ascii_lower(word)) != std::string::npos) return FilterOutcome::reject("banned_word");
  }
  return FilterOutcome::keep();
}

FilterOutcome filter_ppl(const QualityScores& scores, double min, double max) {
  const double v = require(scores.ppl, "ppl");
  if (v < min) return FilterOutcome::reject("ppl_low");
  if (v > max) return FilterOutcome::reject("ppl_high");
  return FilterOutcome::keep();
}

FilterOutcome filter_ifd(const QualityScores& scores, double min, double max) {
  const double v = require(scores.ifd_base, "ifd_base");
  if (v < min) return FilterOutcome::reject("ifd_low");
  if (v > max) return FilterOutcome::reject("ifd_high");
  return FilterOutcome::keep();
}

FilterOutcome filter_ifd_vote(const QualityScores& scores, double max_deviation) {
  const double base = require(scores.ifd_base, "ifd_base");
  const double tuned = require(scores.ifd_tuned, "ifd_tuned");
  if (ifd_vote_deviation(base, tuned) > max_deviation) return FilterOutcome::reject("ifd_vote");
  return FilterOutcome::keep();
}

}  // namespace mixdown
