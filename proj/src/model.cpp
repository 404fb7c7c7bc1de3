#include "mixdown/model.hpp"

#include <numeric>

#include "mixdown/text.hpp"

namespace mixdown {

std::string rendered_text(const Sample& s) {
  std::string out;
  out.reserve(s.instruction.size() + s.input.size() + s.output.size() + 2);
  out += s.instruction;
  out += '\n';
  if (!s.input.empty()) {
    out += s.input;
    out += '\n';
  }
  out += s.output;
  return out;
}

std::string prompt_text(const Sample& s) {
  if (s.input.empty()) return s.instruction;
  return s.instruction + "\n" + s.input;
}

std::optional<std::string> top_language(const QualityScores& scores) {
  std::optional<std::string> best;
  double best_score = -1.0;
  for (const auto& [code, score] : scores.lang) {
    // std::map iterates codes in ascending order, so strict > keeps the smaller code on ties.
    if (score > best_score) {
      best_score = score;
      best = code;
    }
  }
  return best;
}

QualityScores basic_scores(const Sample& s) {
  const std::string text = rendered_text(s);
  QualityScores q;
  q.text_length = static_cast<std::int64_t>(text::char_count(text));
  q.token_count = text::heuristic_token_count(text);
  return q;
}

std::int64_t Histogram::in_range() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t StageReport::rejected_total() const {
  std::int64_t n = 0;
  for (const auto& [reason, count] : rejections) n += count;
  return n;
}

}  // namespace mixdown
