#include "mixdown/select.hpp"

#include <algorithm>
#include <cmath>

#include "mixdown/error.hpp"

namespace mixdown {

namespace {

double ifd_of(const Record& r) {
  if (!r.scores.ifd_base) {
    throw Error(ErrorKind::config, "missing_score", "record " + std::to_string(r.sample.id) + " has no ifd_base");
  }
  return *r.scores.ifd_base;
}

void sort_by_id(std::vector<Record>& records) {
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.sample.id < b.sample.id; });
}

}  // namespace

std::map<std::string, SourcePool> pool_by_source(std::span<const Record> records) {
  std::vector<const Record*> ordered;
  ordered.reserve(records.size());
  for (const auto& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const Record* a, const Record* b) { return a->sample.id < b->sample.id; });

  std::map<std::string, double> sums;
  std::map<std::string, SourcePool> pools;
  for (const Record* r : ordered) {
    sums[r->sample.source] += ifd_of(*r);
    ++pools[r->sample.source].size;
  }
  for (auto& [src, pool] : pools) pool.mean_ifd = sums[src] / static_cast<double>(pool.size);
  return pools;
}

std::map<std::string, std::int64_t> allocate_quotas(const std::map<std::string, SourcePool>& pools, std::int64_t target) {
  if (target <= 0) throw Error(ErrorKind::config, "invalid_target", "quota target must be positive");
  double total = 0.0;
  std::int64_t population = 0;
  for (const auto& [src, pool] : pools) {
    total += pool.mean_ifd;
    population += pool.size;
  }
  if (population == 0) throw Error(ErrorKind::data, "empty_selection_pool", "no survivors to select from");
  if (!(total > 0.0)) throw Error(ErrorKind::data, "empty_selection_pool", "every source has mean IFD 0");

  std::map<std::string, std::int64_t> quotas;
  for (const auto& [src, pool] : pools) {
    const auto share = static_cast<std::int64_t>(std::floor(static_cast<double>(target) * pool.mean_ifd / total));
    quotas[src] = std::min(share, pool.size);
  }
  return quotas;
}

std::vector<std::uint64_t> select_by_ifd(std::span<const Record> source_records, std::int64_t quota) {
  std::vector<const Record*> ranked;
  ranked.reserve(source_records.size());
  for (const auto& r : source_records) ranked.push_back(&r);
  std::sort(ranked.begin(), ranked.end(), [](const Record* a, const Record* b) {
    const double ia = ifd_of(*a), ib = ifd_of(*b);
    if (ia != ib) return ia > ib;
    return a->sample.id < b->sample.id;
  });
  const auto n = std::clamp<std::int64_t>(quota, 0, static_cast<std::int64_t>(ranked.size()));
  std::vector<std::uint64_t> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) ids.push_back(ranked[static_cast<std::size_t>(i)]->sample.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::size_t> kcenter_greedy(const kernels::PointSet& points, std::int64_t k) {
  if (k <= 0) throw Error(ErrorKind::data, "invalid_k", "k must be at least 1");
  if (static_cast<std::size_t>(k) > points.size()) {
    throw Error(ErrorKind::data, "k_exceeds_population",
                "k = " + std::to_string(k) + " but only " + std::to_string(points.size()) + " points");
  }
  return kernels::parallel::kcenter_greedy(points, static_cast<std::size_t>(k));
}

std::vector<std::size_t> kcenter_greedy(std::span<const Embedding> embeddings, std::int64_t k) {
  return kcenter_greedy(kernels::PointSet::from_embeddings(embeddings), k);
}

ReductionResult reduce_language_subset(std::vector<Record> chosen, const std::string& lang, std::int64_t target,
                                       Embedder& embedder) {
  sort_by_id(chosen);
  ReductionResult out;
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (top_language(chosen[i].scores) == lang) subset.push_back(i);
  }
  out.subset_size = subset.size();
  out.subset_kept = subset.size();
  if (target < 0) throw Error(ErrorKind::data, "invalid_k", "reduction target must not be negative");
  if (static_cast<std::size_t>(target) >= subset.size()) {
    if (static_cast<std::size_t>(target) > subset.size()) {
      out.warning = "reduction target " + std::to_string(target) + " for '" + lang + "' exceeds subset size " +
                    std::to_string(subset.size()) + "; left unchanged";
    }
    out.records = std::move(chosen);
    return out;
  }

  std::vector<Record> kept;
  if (target > 0) {
    std::vector<std::string> texts;
    texts.reserve(subset.size());
    for (const auto i : subset) texts.push_back(rendered_text(chosen[i].sample));
    const auto points = kernels::PointSet::from_embeddings(embedder.embed_batch(texts));
    const auto centers = kcenter_greedy(points, target);
    out.radius = kernels::coverage_radius(points, centers);

    std::vector<char> keep(chosen.size(), 1);
    for (const auto i : subset) keep[i] = 0;
    for (const auto c : centers) keep[subset[c]] = 1;
    kept.reserve(chosen.size() - subset.size() + centers.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (keep[i]) kept.push_back(std::move(chosen[i]));
    }
  } else {
    std::vector<char> in_subset(chosen.size(), 0);
    for (const auto i : subset) in_subset[i] = 1;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (!in_subset[i]) kept.push_back(std::move(chosen[i]));
    }
  }
  out.subset_kept = static_cast<std::size_t>(target);
  out.applied = true;
  out.records = std::move(kept);
  return out;
}

BudgetResult enforce_token_budget(std::vector<Record> chosen, std::int64_t budget) {
  sort_by_id(chosen);
  BudgetResult out;
  std::int64_t total = 0;
  std::int64_t smallest = 0;
  for (const auto& r : chosen) {
    if (r.scores.token_count < 1) {
      throw Error(ErrorKind::config, "missing_token_count", "record " + std::to_string(r.sample.id) + " has no token count");
    }
    total += r.scores.token_count;
    smallest = smallest == 0 ? r.scores.token_count : std::min(smallest, r.scores.token_count);
  }
  if (total <= budget) {
    out.records = std::move(chosen);
    out.total_tokens = total;
    return out;
  }

  std::vector<std::size_t> eviction(chosen.size());
  for (std::size_t i = 0; i < eviction.size(); ++i) eviction[i] = i;
  std::sort(eviction.begin(), eviction.end(), [&](std::size_t a, std::size_t b) {
    const double ia = ifd_of(chosen[a]), ib = ifd_of(chosen[b]);
    if (ia != ib) return ia < ib;
    return chosen[a].sample.id > chosen[b].sample.id;
  });

  std::vector<char> removed(chosen.size(), 0);
  for (const auto i : eviction) {
    if (total <= budget) break;
    total -= chosen[i].scores.token_count;
    removed[i] = 1;
    out.removed.push_back(chosen[i].sample.id);
  }
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (!removed[i]) out.records.push_back(std::move(chosen[i]));
  }
  out.total_tokens = total;
  if (!chosen.empty() && budget < smallest) {
    out.warning = "token budget " + std::to_string(budget) + " is below the smallest sample (" +
                  std::to_string(smallest) + " tokens); nothing selected";
  }
  return out;
}

std::vector<Record> order_by_ppl_desc(std::vector<Record> chosen) {
  for (const auto& r : chosen) {
    if (!r.scores.ppl) {
      throw Error(ErrorKind::config, "missing_score", "record " + std::to_string(r.sample.id) + " has no ppl");
    }
  }
  std::stable_sort(chosen.begin(), chosen.end(), [](const Record& a, const Record& b) {
    if (*a.scores.ppl != *b.scores.ppl) return *a.scores.ppl > *b.scores.ppl;
    return a.sample.id < b.sample.id;
  });
  return chosen;
}

}  // namespace mixdown
