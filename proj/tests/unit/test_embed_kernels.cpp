#include <omp.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "mixdown/embed.hpp"
#include "mixdown/error.hpp"
#include "mixdown/hash.hpp"
#include "mixdown/kernels.hpp"
#include "mixdown/langid.hpp"
#include "support.hpp"

using namespace mixdown;

namespace {

std::vector<std::string> random_texts(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> pieces{"the ", "data ", "模型", "数据", "answer ", "x", "ξ", "\n", "😀", "river "};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    const auto len = 1 + rng() % 30;
    for (std::size_t j = 0; j < len; ++j) t += pieces[rng() % pieces.size()];
    out.push_back(t);
  }
  return out;
}

struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_CASE("single trigram embedding") {
  // FNV-1a-64("aaa") mod 256 = 162 (reference script).
  const auto e = hashed_trigram_embedding("aaaa", 256);
  CHECK(e.dimension() == 256);
  CHECK(e.values[162] == 1.0);
  CHECK(e.norm() == 1.0);
}

TEST_CASE("short texts map to e0") {
  const auto e = hashed_trigram_embedding("ab", 8);
  CHECK(e.values == std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(hashed_trigram_embedding("", 8), Error);
}

TEST_CASE("disjoint buckets are sqrt(2) apart") {
  // "aaa" -> 162 and "bbb" -> 165 under D = 256.
  const auto a = hashed_trigram_embedding("aaaa", 256);
  const auto b = hashed_trigram_embedding("bbbb", 256);
  CHECK(euclidean_distance(a, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("embeddings are unit length, deterministic, and metric") {
  const auto texts = random_texts(60, 7);
  HashedTrigramEmbedder embedder(64);
  const auto es = embedder.embed_batch(texts);
  for (const auto& e : es) CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(embedder.embed(texts[3]).values == es[3].values);
  for (std::size_t i = 0; i + 2 < es.size(); i += 3) {
    const double ab = euclidean_distance(es[i], es[i + 1]);
    const double bc = euclidean_distance(es[i + 1], es[i + 2]);
    const double ac = euclidean_distance(es[i], es[i + 2]);
    CHECK(ab == euclidean_distance(es[i + 1], es[i]));
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("serial and parallel kernels agree at every thread count") {
  const auto texts = random_texts(700, 11);
  const auto& profiles = default_profiles();
  const auto md5_ref = kernels::serial::md5_batch(texts);
  const auto emb_ref = kernels::serial::embed_batch(texts, 32);
  const auto lang_ref = kernels::serial::score_languages_batch(texts, profiles);
  const auto points = kernels::PointSet::from_embeddings(emb_ref);
  const auto kc_ref = kernels::serial::kcenter_greedy(points, 40);
  for (const int threads : {1, 2, 4, 16}) {
    ThreadCount guard(threads);
    CHECK(kernels::parallel::md5_batch(texts) == md5_ref);
    const auto emb = kernels::parallel::embed_batch(texts, 32);
    for (std::size_t i = 0; i < texts.size(); ++i) CHECK(emb[i].values == emb_ref[i].values);
    CHECK(kernels::parallel::score_languages_batch(texts, profiles) == lang_ref);
    CHECK(kernels::parallel::kcenter_greedy(points, 40) == kc_ref);
  }
}

TEST_CASE("parallel k-center keeps smallest-index ties") {
  kernels::PointSet ps(1);
  for (int i = 0; i < 64; ++i) ps.push_back(std::vector<double>{static_cast<double>(i % 2)});
  for (const int threads : {1, 3, 8}) {
    ThreadCount guard(threads);
    CHECK(kernels::parallel::kcenter_greedy(ps, 2) == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("coverage radius") {
  kernels::PointSet ps(1);
  for (const double v : {0.0, 1.0, 2.0, 10.0}) ps.push_back(std::vector<double>{v});
  const std::vector<std::size_t> centers{3, 0};
  CHECK(kernels::coverage_radius(ps, centers) == 2.0);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(kernels::coverage_radius(ps, all) == 0.0);
}

TEST_CASE("point set dimension is enforced") {
  kernels::PointSet ps(2);
  CHECK_THROWS_AS(ps.push_back(std::vector<double>{1.0}), Error);
}

TEST_CASE("embedder factory") {
  CHECK(make_embedder({.url = "mock"}, 32)->dimension() == 32);
  CHECK(make_embedder({.url = "http://127.0.0.1:1"}, 8)->descriptor() == "http://127.0.0.1:1");
}
