#include "mixdown/dedup.hpp"

#include <algorithm>
#include <unordered_map>

#include "mixdown/kernels.hpp"

namespace mixdown {

namespace {

void sort_by_id(std::vector<Record>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.sample.id < b.sample.id; });
}

StageResult keep_first(std::vector<Record> records, const std::vector<std::string>& texts,
                       const std::vector<Md5Digest>& digests) {
  StageResult result;
  result.report.stage = "dedup";
  result.report.input_count = static_cast<std::int64_t>(records.size());

  // digest -> positions (into texts) of survivors carrying that digest
  std::unordered_map<Md5Digest, std::vector<std::size_t>, Md5DigestHash> seen;
  seen.reserve(records.size());
  result.records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& bucket = seen[digests[i]];
    const bool duplicate =
        std::any_of(bucket.begin(), bucket.end(), [&](std::size_t j) { return texts[j] == texts[i]; });
    if (duplicate) {
      result.report.reject("duplicate");
      continue;
    }
    bucket.push_back(i);
    result.records.push_back(std::move(records[i]));
  }
  result.report.output_count = static_cast<std::int64_t>(result.records.size());
  return result;
}

std::vector<std::string> render_all(const std::vector<Record>& records) {
  std::vector<std::string> texts(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) texts[i] = rendered_text(records[i].sample);
  return texts;
}

}  // namespace

StageResult dedup_exact(std::vector<Record> records) {
  sort_by_id(records);
  const auto texts = render_all(records);
  const auto digests = kernels::parallel::md5_batch(texts);
  return keep_first(std::move(records), texts, digests);
}

StageResult dedup_exact(std::vector<Record> records, const TextHasher& hasher) {
  sort_by_id(records);
  const auto texts = render_all(records);
  std::vector<Md5Digest> digests;
  digests.reserve(texts.size());
  for (const auto& t : texts) digests.push_back(hasher(t));
  return keep_first(std::move(records), texts, digests);
}

}  // namespace mixdown
