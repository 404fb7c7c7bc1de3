#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mixdown/embed.hpp"
#include "mixdown/kernels.hpp"
#include "mixdown/model.hpp"

namespace mixdown {

struct SourcePool {
  std::int64_t size = 0;
  double mean_ifd = 0.0;
};

// Groups records by source; mean_ifd averages ifd_base in id order.
std::map<std::string, SourcePool> pool_by_source(std::span<const Record> records);

// quota_s = floor(target * m_s / sum(m)), capped at the source size. Slack left
// by the cap is not handed to other sources.
std::map<std::string, std::int64_t> allocate_quotas(const std::map<std::string, SourcePool>& pools, std::int64_t target);

// The `quota` records with the highest ifd_base (ties: smaller id), as ids in
// ascending order.
std::vector<std::uint64_t> select_by_ifd(std::span<const Record> source_records, std::int64_t quota);

// Validated front end for the k-center kernel: k <= 0 is Error{"invalid_k"},
// k > n is Error{"k_exceeds_population"}. Returns centers in selection order.
std::vector<std::size_t> kcenter_greedy(const kernels::PointSet& points, std::int64_t k);
std::vector<std::size_t> kcenter_greedy(std::span<const Embedding> embeddings, std::int64_t k);

struct ReductionResult {
  std::vector<Record> records;  // id order
  std::size_t subset_size = 0;
  std::size_t subset_kept = 0;
  double radius = 0.0;          // coverage radius of the kept subset over the whole subset
  bool applied = false;
  std::string warning;
};

// Replaces the records whose top language is `lang` with a k-center greedy
// selection of `target` of them, embedding rendered_text. Targets at or above
// the subset size leave everything untouched (with a warning when above).
ReductionResult reduce_language_subset(std::vector<Record> chosen, const std::string& lang, std::int64_t target,
                                       Embedder& embedder);

struct BudgetResult {
  std::vector<Record> records;         // id order
  std::vector<std::uint64_t> removed;  // eviction order
  std::int64_t total_tokens = 0;
  std::string warning;
};

// Evicts the lowest-ifd_base record (ties: larger id first) until the token
// total fits the budget.
BudgetResult enforce_token_budget(std::vector<Record> chosen, std::int64_t budget);

// Stable sort by ppl descending, ties by ascending id.
std::vector<Record> order_by_ppl_desc(std::vector<Record> chosen);

}  // namespace mixdown
