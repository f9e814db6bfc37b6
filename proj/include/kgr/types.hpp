#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace kgr {

using PassageId = std::uint32_t;

/// Which stage produced a ScoredPassage's score.
enum class Provenance { sparse, dense, reranker, fused };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view name) noexcept;

struct ScoredPassage {
  PassageId passage_id = 0;
  double score = 0.0;
  Provenance provenance = Provenance::sparse;

  friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Ranking order used everywhere: score descending, then passage id ascending.
inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.passage_id < b.passage_id;
}

}  // namespace kgr
