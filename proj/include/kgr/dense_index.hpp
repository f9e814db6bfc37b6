#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgr/corpus.hpp"
#include "kgr/embedding.hpp"
#include "kgr/types.hpp"

namespace kgr {

/// Row-major count x dim matrix of 32-bit floats.
struct VectorMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  friend bool operator==(const VectorMatrix&, const VectorMatrix&) = default;
};

/// Vector file: "KGRV" magic, u32 version, u64 count, u32 dim, then
/// count*dim little-endian float32 values in row order.
void write_vector_file(const std::filesystem::path& path, const VectorMatrix& matrix);
VectorMatrix read_vector_file(const std::filesystem::path& path);

/// Exact inner-product index; row i holds the passage-role embedding of
/// passage i.
class DenseIndex {
 public:
  /// Embeds passage texts in batches of batch_size. Throws EmptyCorpus,
  /// DimensionMismatch, ProviderUnavailable.
  static DenseIndex build(const Corpus& corpus, const EmbeddingProvider& provider,
                          std::size_t batch_size = 64);

  /// Adopts precomputed rows. Throws LengthMismatch when the row count
  /// differs from the corpus size.
  static DenseIndex from_vectors(const Corpus& corpus, VectorMatrix vectors,
                                 std::string fingerprint);

  /// Inner-product top-n, ties by ascending id. Throws DimensionMismatch.
  std::vector<ScoredPassage> search(std::span<const float> query, std::size_t n) const;
  std::vector<double> score_all(std::span<const float> query) const;
  std::vector<double> score_all_reference(std::span<const float> query) const;

  std::size_t size() const noexcept { return vectors_.count; }
  std::size_t dim() const noexcept { return vectors_.dim; }
  std::span<const float> row(std::size_t i) const { return vectors_.row(i); }
  const VectorMatrix& vectors() const noexcept { return vectors_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  const std::string& corpus_digest() const noexcept { return corpus_digest_; }

  void save(const std::filesystem::path& path) const;
  static DenseIndex load(const std::filesystem::path& path);

 private:
  DenseIndex() = default;

  VectorMatrix vectors_;
  std::string fingerprint_;
  std::string corpus_digest_;
};

}  // namespace kgr
