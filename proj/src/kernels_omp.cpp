#include <omp.h>

#include <algorithm>

#include "kgr/kernels.hpp"

namespace kgr::kernels::omp {

namespace {

// Below this many elements the fork/join costs more than the loop.
constexpr std::ptrdiff_t kParallelThreshold = 4096;

}  // namespace

void bm25_accumulate(std::span<const Posting> postings, double idf, double k1,
                     std::span<const double> norms, std::span<double> scores) {
  // Passage ids are unique within one posting list, so writes never collide.
  const auto count = static_cast<std::ptrdiff_t>(postings.size());
  const Posting* p = postings.data();
  double* out = scores.data();
  const double* norm = norms.data();
#pragma omp parallel for schedule(static) if (count >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const double tf = p[i].tf;
    out[p[i].passage] += idf * (tf * (k1 + 1.0) / (tf + norm[p[i].passage]));
  }
}

void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> scores) {
  const auto rows = static_cast<std::ptrdiff_t>(scores.size());
  const float* base = matrix.data();
  const float* q = query.data();
  double* out = scores.data();
#pragma omp parallel for schedule(static) if (rows * static_cast<std::ptrdiff_t>(dim) >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const float* row = base + static_cast<std::size_t>(i) * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc += static_cast<double>(row[j]) * static_cast<double>(q[j]);
    }
    out[i] = acc;
  }
}

std::vector<ScoredPassage> top_n(std::span<const double> scores, std::size_t n,
                                 Provenance provenance) {
  const auto total = static_cast<std::ptrdiff_t>(scores.size());
  n = std::min(n, scores.size());
  if (n == 0) return {};

  const int threads = total >= kParallelThreshold ? omp_get_max_threads() : 1;
  std::vector<std::vector<ScoredPassage>> partial(static_cast<std::size_t>(threads));

#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    const int nt = omp_get_num_threads();
    const std::ptrdiff_t begin = total * t / nt;
    const std::ptrdiff_t end = total * (t + 1) / nt;
    auto& local = partial[static_cast<std::size_t>(t)];
    local.reserve(static_cast<std::size_t>(end - begin));
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      local.push_back({static_cast<PassageId>(i), scores[static_cast<std::size_t>(i)], provenance});
    }
    const auto keep = std::min(n, local.size());
    std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                      ranks_before);
    local.resize(keep);
  }

  std::vector<ScoredPassage> merged;
  for (auto& local : partial) merged.insert(merged.end(), local.begin(), local.end());
  std::partial_sort(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(n), merged.end(),
                    ranks_before);
  merged.resize(n);
  return merged;
}

}  // namespace kgr::kernels::omp
