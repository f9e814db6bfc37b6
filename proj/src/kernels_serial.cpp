#include <algorithm>
#include <numeric>

#include "kgr/kernels.hpp"

namespace kgr::kernels::serial {

void bm25_accumulate(std::span<const Posting> postings, double idf, double k1,
                     std::span<const double> norms, std::span<double> scores) {
  for (const auto& p : postings) {
    const double tf = p.tf;
    scores[p.passage] += idf * (tf * (k1 + 1.0) / (tf + norms[p.passage]));
  }
}

void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const float* row = matrix.data() + i * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc += static_cast<double>(row[j]) * static_cast<double>(query[j]);
    }
    scores[i] = acc;
  }
}

std::vector<ScoredPassage> top_n(std::span<const double> scores, std::size_t n,
                                 Provenance provenance) {
  std::vector<ScoredPassage> all(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    all[i] = {static_cast<PassageId>(i), scores[i], provenance};
  }
  n = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    ranks_before);
  all.resize(n);
  return all;
}

}  // namespace kgr::kernels::serial
