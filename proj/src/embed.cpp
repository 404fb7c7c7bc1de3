#include "mixdown/embed.hpp"

#include <cmath>

#include "mixdown/error.hpp"
#include "mixdown/hash.hpp"
#include "mixdown/kernels.hpp"
#include "mixdown/remote.hpp"
#include "mixdown/text.hpp"

namespace mixdown {

double Embedding::norm() const {
  double ss = 0.0;
  for (const double v : values) ss += v * v;
  return std::sqrt(ss);
}

Embedding hashed_trigram_embedding(std::string_view text, std::size_t dim) {
  if (text.empty()) throw Error(ErrorKind::data, "empty_text", "cannot embed empty text");
  Embedding e{std::vector<double>(dim, 0.0)};
  const auto chars = text::split_chars(text);
  if (chars.size() < 3) {
    e.values[0] = 1.0;
    return e;
  }
  std::string tri;
  for (std::size_t i = 0; i + 2 < chars.size(); ++i) {
    tri.clear();
    tri.append(chars[i]).append(chars[i + 1]).append(chars[i + 2]);
    e.values[fnv1a64(tri) % dim] += 1.0;
  }
  const double n = e.norm();
  for (double& v : e.values) v /= n;
  return e;
}

double euclidean_distance(const Embedding& a, const Embedding& b) {
  return std::sqrt(kernels::squared_distance(a.values, b.values));
}

Embedding Embedder::embed(std::string_view text) {
  const std::string t(text);
  auto out = embed_batch(std::span<const std::string>(&t, 1));
  return std::move(out.front());
}

std::vector<Embedding> HashedTrigramEmbedder::embed_batch(std::span<const std::string> texts) {
  return kernels::parallel::embed_batch(texts, dim_);
}

std::unique_ptr<Embedder> make_embedder(const ProviderSpec& spec, std::size_t dim) {
  if (spec.is_mock()) return std::make_unique<HashedTrigramEmbedder>(dim);
  return std::make_unique<RemoteEmbedder>(spec, dim);
}

}  // namespace mixdown
