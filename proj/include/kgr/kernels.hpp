#pragma once

// Scoring kernels used by the indexes. `serial` is the reference
// implementation kept for tests and benchmarks; `omp` is what the indexes
// call. Both produce bit-identical scores: each output element is reduced
// sequentially in the same order, only the outer loop is split.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kgr/types.hpp"

namespace kgr {

struct Posting {
  PassageId passage = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

namespace kernels {

// scores[p] += idf * tf * (k1 + 1) / (tf + norm[p]) for every posting,
// where norm[p] = k1 * (1 - b + b * len[p] / avg_len).
namespace serial {
void bm25_accumulate(std::span<const Posting> postings, double idf, double k1,
                     std::span<const double> norms, std::span<double> scores);
// scores[i] = sum_j matrix[i*dim + j] * query[j], accumulated in double.
void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> scores);
// First min(n, size) entries by (score desc, index asc).
std::vector<ScoredPassage> top_n(std::span<const double> scores, std::size_t n,
                                 Provenance provenance);
}  // namespace serial

namespace omp {
void bm25_accumulate(std::span<const Posting> postings, double idf, double k1,
                     std::span<const double> norms, std::span<double> scores);
void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> scores);
// Per-thread partial selection followed by a merge.
std::vector<ScoredPassage> top_n(std::span<const double> scores, std::size_t n,
                                 Provenance provenance);
}  // namespace omp

}  // namespace kernels
}  // namespace kgr
