#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mixdown/embed.hpp"
#include "mixdown/hash.hpp"
#include "mixdown/langid.hpp"

// Data-parallel inner loops of the pipeline. Every kernel exists twice:
// `serial` is the plain reference implementation, `parallel` is the OpenMP
// version used in production. Both produce bit-identical results for any
// thread count; the test suite checks that they agree.
namespace mixdown::kernels {

// Row-major n x dim matrix of coordinates.
class PointSet {
 public:
  explicit PointSet(std::size_t dim) : dim_(dim) {}

  static PointSet from_embeddings(std::span<const Embedding> embeddings);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  void push_back(std::span<const double> point);
  std::span<const double> row(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// max over points of the Euclidean distance to the nearest center.
double coverage_radius(const PointSet& points, std::span<const std::size_t> centers);

namespace serial {

std::vector<Md5Digest> md5_batch(std::span<const std::string> texts);
std::vector<Embedding> embed_batch(std::span<const std::string> texts, std::size_t dim);
std::vector<std::map<std::string, double>> score_languages_batch(std::span<const std::string> texts,
                                                                 std::span<const LanguageProfile> profiles);
// Farthest-first traversal seeded at the point farthest from the centroid.
// Ties go to the smallest index. Requires 1 <= k <= points.size().
std::vector<std::size_t> kcenter_greedy(const PointSet& points, std::size_t k);

}  // namespace serial

namespace parallel {

std::vector<Md5Digest> md5_batch(std::span<const std::string> texts);
std::vector<Embedding> embed_batch(std::span<const std::string> texts, std::size_t dim);
std::vector<std::map<std::string, double>> score_languages_batch(std::span<const std::string> texts,
                                                                 std::span<const LanguageProfile> profiles);
std::vector<std::size_t> kcenter_greedy(const PointSet& points, std::size_t k);

}  // namespace parallel

}  // namespace mixdown::kernels
