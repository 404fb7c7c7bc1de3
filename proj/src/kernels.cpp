#include "mixdown/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "mixdown/error.hpp"

namespace mixdown::kernels {

namespace {

struct Best {
  double value = -1.0;
  std::size_t index = std::numeric_limits<std::size_t>::max();

  // Larger value wins; equal values go to the smaller index. This is a
  // total order, so combining per-thread winners in any order is exact.
  void offer(double v, std::size_t i) {
    if (v > value || (v == value && i < index)) {
      value = v;
      index = i;
    }
  }
};

std::vector<double> centroid(const PointSet& points) {
  const std::size_t n = points.size();
  std::vector<double> c(points.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = points.row(i);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += p[d];
  }
  for (double& v : c) v /= static_cast<double>(n);
  return c;
}

void require_non_empty(std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorKind::data, "empty_text", "cannot embed empty text");
  }
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

PointSet PointSet::from_embeddings(std::span<const Embedding> embeddings) {
  PointSet ps(embeddings.empty() ? 0 : embeddings.front().dimension());
  for (const auto& e : embeddings) ps.push_back(e.values);
  return ps;
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) throw Error(ErrorKind::data, "dimension_mismatch", "point has wrong dimension");
  coords_.insert(coords_.end(), point.begin(), point.end());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double coverage_radius(const PointSet& points, std::span<const std::size_t> centers) {
  if (centers.empty()) return points.size() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto c : centers) nearest = std::min(nearest, squared_distance(points.row(i), points.row(c)));
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

namespace serial {

std::vector<Md5Digest> md5_batch(std::span<const std::string> texts) {
  std::vector<Md5Digest> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out[i] = md5(texts[i]);
  return out;
}

std::vector<Embedding> embed_batch(std::span<const std::string> texts, std::size_t dim) {
  require_non_empty(texts);
  std::vector<Embedding> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out[i] = hashed_trigram_embedding(texts[i], dim);
  return out;
}

std::vector<std::map<std::string, double>> score_languages_batch(std::span<const std::string> texts,
                                                                 std::span<const LanguageProfile> profiles) {
  std::vector<std::map<std::string, double>> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out[i] = score_languages(texts[i], profiles);
  return out;
}

std::vector<std::size_t> kcenter_greedy(const PointSet& points, std::size_t k) {
  const std::size_t n = points.size();
  std::vector<std::size_t> centers;
  if (n == 0 || k == 0) return centers;
  k = std::min(k, n);

  const auto c = centroid(points);
  Best seed;
  for (std::size_t i = 0; i < n; ++i) seed.offer(squared_distance(points.row(i), c), i);

  std::vector<char> chosen(n, 0);
  std::vector<double> min_dist(n);
  centers.push_back(seed.index);
  chosen[seed.index] = 1;
  for (std::size_t i = 0; i < n; ++i) min_dist[i] = squared_distance(points.row(i), points.row(seed.index));

  while (centers.size() < k) {
    Best next;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) next.offer(min_dist[i], i);
    }
    centers.push_back(next.index);
    chosen[next.index] = 1;
    const auto center = points.row(next.index);
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], squared_distance(points.row(i), center));
  }
  return centers;
}

}  // namespace serial

namespace parallel {

std::vector<Md5Digest> md5_batch(std::span<const std::string> texts) {
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  std::vector<Md5Digest> out(texts.size());
  std::vector<std::exception_ptr> errors(texts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = md5(texts[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

std::vector<Embedding> embed_batch(std::span<const std::string> texts, std::size_t dim) {
  require_non_empty(texts);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  std::vector<Embedding> out(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = hashed_trigram_embedding(texts[i], dim);
  return out;
}

std::vector<std::map<std::string, double>> score_languages_batch(std::span<const std::string> texts,
                                                                 std::span<const LanguageProfile> profiles) {
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  std::vector<std::map<std::string, double>> out(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score_languages(texts[i], profiles);
  return out;
}

std::vector<std::size_t> kcenter_greedy(const PointSet& points, std::size_t k) {
  const std::size_t n = points.size();
  std::vector<std::size_t> centers;
  if (n == 0 || k == 0) return centers;
  k = std::min(k, n);
  const auto sn = static_cast<std::ptrdiff_t>(n);

  const auto c = centroid(points);
  std::vector<double> min_dist(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) min_dist[i] = squared_distance(points.row(i), c);

  std::vector<char> chosen(n, 0);
  auto argmax = [&] {
    Best global;
#pragma omp parallel
    {
      Best local;
#pragma omp for schedule(static) nowait
      for (std::ptrdiff_t i = 0; i < sn; ++i) {
        if (!chosen[i]) local.offer(min_dist[i], static_cast<std::size_t>(i));
      }
#pragma omp critical(mixdown_kcenter_argmax)
      global.offer(local.value, local.index);
    }
    return global.index;
  };

  // First pass picks the centroid-farthest point; min_dist then switches to
  // distance-to-nearest-center.
  std::size_t next = argmax();
  const auto first = points.row(next);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) min_dist[i] = squared_distance(points.row(i), first);
  centers.push_back(next);
  chosen[next] = 1;

  while (centers.size() < k) {
    next = argmax();
    centers.push_back(next);
    chosen[next] = 1;
    const auto center = points.row(next);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) min_dist[i] = std::min(min_dist[i], squared_distance(points.row(i), center));
  }
  return centers;
}

}  // namespace parallel

}  // namespace mixdown::kernels
