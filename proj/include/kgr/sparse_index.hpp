#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgr/corpus.hpp"
#include "kgr/kernels.hpp"
#include "kgr/types.hpp"

namespace kgr {

/// Okapi BM25 parameters. IDF values below zero are replaced by
/// epsilon * (mean IDF over the vocabulary).
struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
  double epsilon = 0.25;

  /// Throws InvalidArgument unless k1 > 0, 0 <= b <= 1, epsilon >= 0.
  void validate() const;

  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// Inverted index with BM25 scoring. Immutable once built; search is const
/// and safe to call from many threads.
class SparseIndex {
 public:
  /// Throws EmptyCorpus.
  static SparseIndex build(const Corpus& corpus, const Bm25Params& params = {});

  /// Top-n passages for the query text, ties broken by ascending id.
  /// Zero-score passages are eligible; n is clamped to the corpus size.
  std::vector<ScoredPassage> search(std::string_view query_text, std::size_t n) const;

  /// BM25 score for every passage. Repeated query tokens contribute once
  /// per occurrence; unknown tokens contribute nothing.
  std::vector<double> score_all(std::span<const std::string> query_tokens) const;

  /// Same as score_all but through the serial reference kernel.
  std::vector<double> score_all_reference(std::span<const std::string> query_tokens) const;

  /// Floored IDF, or 0 for out-of-vocabulary terms.
  double idf(std::string_view term) const;
  std::span<const Posting> postings(std::string_view term) const;

  std::size_t corpus_size() const noexcept { return lengths_.size(); }
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  double average_length() const noexcept { return average_length_; }
  std::span<const std::uint32_t> lengths() const noexcept { return lengths_; }
  const Bm25Params& params() const noexcept { return params_; }
  const std::string& corpus_digest() const noexcept { return corpus_digest_; }

  void save(const std::filesystem::path& path) const;
  /// Throws FormatError on bad magic, unsupported version, or truncation.
  static SparseIndex load(const std::filesystem::path& path);

 private:
  struct Term {
    std::vector<Posting> postings;
    double idf = 0.0;
  };

  SparseIndex() = default;
  void finalize();
  template <typename Accumulate>
  std::vector<double> score_with(std::span<const std::string> query_tokens,
                                 Accumulate accumulate) const;

  std::unordered_map<std::string, Term> terms_;
  std::vector<std::uint32_t> lengths_;
  std::vector<double> norms_;
  double average_length_ = 0.0;
  Bm25Params params_;
  std::string corpus_digest_;
};

}  // namespace kgr
