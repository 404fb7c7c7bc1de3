#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mixdown/model.hpp"

namespace mixdown {

struct FilterOutcome {
  bool kept = true;
  std::string reason;  // set iff !kept

  static FilterOutcome keep() { return {}; }
  static FilterOutcome reject(std::string why) { return {false, std::move(why)}; }
};

// Windows are inclusive on both ends; the language test is strict (> threshold)
// and the vote test rejects only deviations strictly above the maximum.

FilterOutcome filter_length(std::int64_t text_length, std::int64_t min, std::int64_t max);
FilterOutcome filter_length(const Sample& sample, std::int64_t min, std::int64_t max);

FilterOutcome filter_language(const std::map<std::string, double>& scores, double threshold,
                              const std::set<std::string>& allowed);

// Case-insensitive for ASCII, byte-exact otherwise. Empty list keeps everything.
FilterOutcome filter_banned_words(std::string_view text, const std::vector<std::string>& banned);

// Missing scores are a pipeline ordering bug: Error{"missing_score"}.
FilterOutcome filter_ppl(const QualityScores& scores, double min, double max);
FilterOutcome filter_ifd(const QualityScores& scores, double min, double max);
FilterOutcome filter_ifd_vote(const QualityScores& scores, double max_deviation);

}  // namespace mixdown
