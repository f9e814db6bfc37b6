#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgr {

/// Queries and passages go through different encoders.
enum class EmbeddingRole { query, passage };

std::string_view to_string(EmbeddingRole role) noexcept;

using Embedding = std::vector<float>;

/// Source of query/passage embeddings. Implementations must return one
/// vector per text, all of the same dimension, deterministically for a
/// given (text, role). embed() may be called concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::vector<Embedding> embed(std::span<const std::string> texts,
                                       EmbeddingRole role) const = 0;
  /// Identifies the model/configuration; recorded in dense indexes.
  virtual std::string fingerprint() const = 0;
};

/// Deterministic bag-of-words feature hashing: each token adds 1 to the
/// bucket fnv1a(token) % dim. Both roles use the same map. Intended for
/// tests and toy runs without a model service.
class HashingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashingEmbeddingProvider(std::size_t dim = 64);

  std::vector<Embedding> embed(std::span<const std::string> texts,
                               EmbeddingRole role) const override;
  std::string fingerprint() const override;
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

/// Vectors looked up by exact (role, text). Throws ProviderUnavailable for
/// texts it has no vector for.
class PrecomputedEmbeddingProvider final : public EmbeddingProvider {
 public:
  PrecomputedEmbeddingProvider(std::string fingerprint, std::size_t dim);

  /// Throws DimensionMismatch.
  void add(EmbeddingRole role, std::string text, Embedding vector);

  /// Lines of {"text": str, "role": "query"|"passage", "vector": [floats]}.
  static PrecomputedEmbeddingProvider load_jsonl(const std::filesystem::path& path);

  std::vector<Embedding> embed(std::span<const std::string> texts,
                               EmbeddingRole role) const override;
  std::string fingerprint() const override { return fingerprint_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::string fingerprint_;
  std::size_t dim_;
  std::map<std::string, Embedding, std::less<>> queries_;
  std::map<std::string, Embedding, std::less<>> passages_;
};

/// Client for the model service's POST /embed route. Requests are chunked
/// to at most max_batch texts. The fingerprint comes from GET /info when
/// the service answers it, otherwise from the endpoint URL.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::string endpoint, std::size_t max_batch = 256);

  std::vector<Embedding> embed(std::span<const std::string> texts,
                               EmbeddingRole role) const override;
  std::string fingerprint() const override;

 private:
  std::string endpoint_;
  std::size_t max_batch_;
};

/// "http://..." -> HttpEmbeddingProvider; "stub:hashing[:dim]" ->
/// HashingEmbeddingProvider; anything else is a precomputed JSONL table.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec);

}  // namespace kgr
