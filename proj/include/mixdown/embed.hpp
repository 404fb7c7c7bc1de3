#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixdown/recipe.hpp"

namespace mixdown {

// Unit-length vector used by diversity selection.
struct Embedding {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  double norm() const;
};

// Built-in embedder: hashed character-trigram term frequencies,
// bucket = FNV-1a-64(trigram bytes) mod dim, then L2-normalized. Texts with
// fewer than 3 characters map to the basis vector e_0.
Embedding hashed_trigram_embedding(std::string_view text, std::size_t dim);

double euclidean_distance(const Embedding& a, const Embedding& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string descriptor() const = 0;
  virtual std::size_t dimension() const = 0;
  // One embedding per text, in order. Empty texts throw Error{"empty_text"}.
  virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) = 0;

  Embedding embed(std::string_view text);
};

class HashedTrigramEmbedder final : public Embedder {
 public:
  explicit HashedTrigramEmbedder(std::size_t dim = 256) : dim_(dim) {}
  std::string descriptor() const override { return "mock"; }
  std::size_t dimension() const override { return dim_; }
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
};

std::unique_ptr<Embedder> make_embedder(const ProviderSpec& spec, std::size_t dim);

}  // namespace mixdown
