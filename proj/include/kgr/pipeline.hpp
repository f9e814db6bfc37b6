#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgr/corpus.hpp"
#include "kgr/dense_index.hpp"
#include "kgr/embedding.hpp"
#include "kgr/sparse_index.hpp"
#include "kgr/types.hpp"

namespace kgr {

/// One (question, answer choice) retrieval request.
struct RetrievalQuery {
  std::string question;
  std::string choice;

  /// Throws InvalidArgument when either side is blank.
  void validate() const;
};

enum class FilterMode { none, csqa };

std::string_view to_string(FilterMode mode) noexcept;

struct PipelineConfig {
  std::size_t n_per_retriever = 100;
  std::size_t top_k = 100;
  bool rerank_enabled = true;
  FilterMode filter_mode = FilterMode::none;

  /// Throws InvalidArgument unless N >= 1 and K >= 1.
  void validate() const;

  /// N=100, K=100, rerank on, relation/overlap filter on.
  static PipelineConfig commonsense_qa();
  /// N=100, K=20, rerank on, no filter.
  static PipelineConfig openbook_qa();
};

/// Cross-encoder style (query, passage) relevance in [0,1].
class RerankScorer {
 public:
  virtual ~RerankScorer() = default;

  /// One score per passage text. May be called concurrently.
  virtual std::vector<double> score_pairs(std::string_view query,
                                          std::span<const std::string> passages) const = 0;
  virtual std::string name() const = 0;
};

/// Fraction of distinct query tokens that also occur in the passage.
class LexicalRerankScorer final : public RerankScorer {
 public:
  std::vector<double> score_pairs(std::string_view query,
                                  std::span<const std::string> passages) const override;
  std::string name() const override { return "stub:lexical"; }
};

class ConstantRerankScorer final : public RerankScorer {
 public:
  explicit ConstantRerankScorer(double value = 0.5) : value_(value) {}

  std::vector<double> score_pairs(std::string_view query,
                                  std::span<const std::string> passages) const override;
  std::string name() const override;

 private:
  double value_;
};

/// Client for the model service's POST /rerank route, chunked at max_batch.
class HttpRerankScorer final : public RerankScorer {
 public:
  explicit HttpRerankScorer(std::string endpoint, std::size_t max_batch = 256);

  std::vector<double> score_pairs(std::string_view query,
                                  std::span<const std::string> passages) const override;
  std::string name() const override { return endpoint_; }

 private:
  std::string endpoint_;
  std::size_t max_batch_;
};

/// "http://..." -> HttpRerankScorer; "stub:lexical"; "stub:constant[:v]".
std::unique_ptr<RerankScorer> make_rerank_scorer(std::string_view spec);

/// question + " " + choice.
std::string make_query_text(const RetrievalQuery& query);

struct HybridCandidates {
  std::vector<ScoredPassage> sparse;
  std::vector<ScoredPassage> dense;
};

/// Top-n from each retriever using the same query text; the two lists are
/// returned as-is, without cross-list deduplication.
HybridCandidates hybrid_retrieve(const RetrievalQuery& query, const SparseIndex& sparse,
                                 const DenseIndex& dense, const EmbeddingProvider& provider,
                                 std::size_t n);

/// Passage ids of both lists in first-seen order (sparse first), each once.
std::vector<PassageId> unique_candidates(const HybridCandidates& candidates);

/// Scores each candidate once against make_query_text(query) and sorts by
/// score desc, id asc. Throws ScoreOutOfRange, LengthMismatch.
std::vector<ScoredPassage> rerank(const RetrievalQuery& query,
                                  std::span<const PassageId> candidates, const Corpus& corpus,
                                  const RerankScorer& scorer);

/// No-rerank combiner: co-retrieved passages get the mean of their two
/// scores; a passage missing from one list takes that list's lowest score
/// as the missing value before averaging. Throws EmptyList.
std::vector<ScoredPassage> fuse_without_rerank(std::span<const ScoredPassage> sparse,
                                               std::span<const ScoredPassage> dense);

/// Drops passages built from a RelatedTo triplet and passages sharing no
/// token with the union of all answer choices. Order is preserved.
std::vector<ScoredPassage> filter_csqa(std::span<const ScoredPassage> ranked,
                                       const Corpus& corpus,
                                       std::span<const std::string> all_choices);

std::vector<ScoredPassage> select_top_k(std::span<const ScoredPassage> ranked, std::size_t k);

/// End-to-end per-choice retrieval over one corpus and its two indexes.
/// The referenced objects must outlive the pipeline.
class RetrievalPipeline {
 public:
  /// Throws DigestMismatch when either index was built from another corpus,
  /// InvalidArgument when reranking is enabled without a scorer.
  RetrievalPipeline(const Corpus& corpus, const SparseIndex& sparse, const DenseIndex& dense,
                    const EmbeddingProvider& provider, const RerankScorer* scorer,
                    PipelineConfig config);

  /// P_K for one (question, choice). all_choices feeds the csqa filter;
  /// when empty, the query's own choice is used.
  std::vector<ScoredPassage> retrieve_for_choice(const RetrievalQuery& query,
                                                 std::span<const std::string> all_choices) const;

  const Corpus& corpus() const noexcept { return corpus_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  const Corpus& corpus_;
  const SparseIndex& sparse_;
  const DenseIndex& dense_;
  const EmbeddingProvider& provider_;
  const RerankScorer* scorer_;
  PipelineConfig config_;
};

}  // namespace kgr
