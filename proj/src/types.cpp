#include "kgr/types.hpp"

namespace kgr {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::sparse: return "sparse";
    case Provenance::dense: return "dense";
    case Provenance::reranker: return "reranker";
    case Provenance::fused: return "fused";
  }
  return "unknown";
}

std::optional<Provenance> parse_provenance(std::string_view name) noexcept {
  if (name == "sparse") return Provenance::sparse;
  if (name == "dense") return Provenance::dense;
  if (name == "reranker") return Provenance::reranker;
  if (name == "fused") return Provenance::fused;
  return std::nullopt;
}

}  // namespace kgr
