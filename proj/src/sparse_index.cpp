#include "kgr/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "binary_io.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

constexpr std::string_view kMagic = "KGRSPARS";
constexpr std::uint32_t kVersion = 1;

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw InvalidArgument("sparse", "k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("sparse", "b must lie in [0, 1]");
  if (!(epsilon >= 0.0)) throw InvalidArgument("sparse", "epsilon must be >= 0");
}

SparseIndex SparseIndex::build(const Corpus& corpus, const Bm25Params& params) {
  params.validate();
  if (corpus.empty()) throw EmptyCorpus("sparse");

  SparseIndex index;
  index.params_ = params;
  index.corpus_digest_ = corpus.digest();
  index.lengths_.reserve(corpus.size());

  std::map<std::string, std::uint32_t> counts;
  for (const auto& passage : corpus.passages()) {
    counts.clear();
    auto tokens = tokenize(passage.text);
    for (auto& tok : tokens) ++counts[std::move(tok)];
    for (const auto& [term, tf] : counts) {
      index.terms_[term].postings.push_back({passage.id, tf});
    }
    index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
  }
  index.finalize();
  return index;
}

void SparseIndex::finalize() {
  const double n_docs = static_cast<double>(lengths_.size());
  double total = 0.0;
  for (auto len : lengths_) total += len;
  average_length_ = lengths_.empty() ? 0.0 : total / n_docs;

  norms_.resize(lengths_.size());
  for (std::size_t i = 0; i < lengths_.size(); ++i) {
    const double ratio = average_length_ > 0.0 ? lengths_[i] / average_length_ : 0.0;
    norms_[i] = params_.k1 * (1.0 - params_.b + params_.b * ratio);
  }

  // Sum in lexicographic term order so the floor is reproducible.
  std::vector<std::pair<const std::string*, Term*>> ordered;
  ordered.reserve(terms_.size());
  for (auto& [term, entry] : terms_) ordered.emplace_back(&term, &entry);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return *a.first < *b.first; });

  double idf_sum = 0.0;
  for (auto& [term, entry] : ordered) {
    const double df = static_cast<double>(entry->postings.size());
    entry->idf = std::log(n_docs - df + 0.5) - std::log(df + 0.5);
    idf_sum += entry->idf;
  }
  const double floor = terms_.empty() ? 0.0 : params_.epsilon * idf_sum / static_cast<double>(terms_.size());
  for (auto& [term, entry] : ordered) {
    if (entry->idf < 0.0) entry->idf = floor;
  }
}

template <typename Accumulate>
std::vector<double> SparseIndex::score_with(std::span<const std::string> query_tokens,
                                            Accumulate accumulate) const {
  std::vector<double> scores(corpus_size(), 0.0);
  for (const auto& tok : query_tokens) {
    auto it = terms_.find(tok);
    if (it == terms_.end()) continue;
    accumulate(std::span<const Posting>(it->second.postings), it->second.idf, params_.k1,
               std::span<const double>(norms_), std::span<double>(scores));
  }
  return scores;
}

std::vector<double> SparseIndex::score_all(std::span<const std::string> query_tokens) const {
  return score_with(query_tokens, kernels::omp::bm25_accumulate);
}

std::vector<double> SparseIndex::score_all_reference(
    std::span<const std::string> query_tokens) const {
  return score_with(query_tokens, kernels::serial::bm25_accumulate);
}

std::vector<ScoredPassage> SparseIndex::search(std::string_view query_text, std::size_t n) const {
  if (n == 0) throw InvalidArgument("sparse", "n must be >= 1");
  auto tokens = tokenize(query_text);
  auto scores = score_all(tokens);
  return kernels::omp::top_n(scores, n, Provenance::sparse);
}

double SparseIndex::idf(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  return it == terms_.end() ? 0.0 : it->second.idf;
}

std::span<const Posting> SparseIndex::postings(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  if (it == terms_.end()) return {};
  return it->second.postings;
}

void SparseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("sparse", "cannot write " + path.string());
  io::Writer w(out);
  w.bytes(kMagic);
  w.u32(kVersion);
  w.f64(params_.k1);
  w.f64(params_.b);
  w.f64(params_.epsilon);
  w.str(corpus_digest_);
  w.u64(lengths_.size());
  for (auto len : lengths_) w.u32(len);

  std::vector<const std::string*> keys;
  keys.reserve(terms_.size());
  for (const auto& [term, entry] : terms_) keys.push_back(&term);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
  w.u64(keys.size());
  for (const auto* key : keys) {
    const auto& postings = terms_.at(*key).postings;
    w.str(*key);
    w.u64(postings.size());
    for (const auto& p : postings) {
      w.u32(p.passage);
      w.u32(p.tf);
    }
  }
  if (!out) throw FormatError("sparse", "write failed for " + path.string());
}

SparseIndex SparseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("sparse", "cannot open " + path.string());
  io::Reader r(in, "sparse");
  if (r.bytes(kMagic.size()) != kMagic) {
    throw FormatError("sparse", path.string() + " is not a sparse index");
  }
  if (auto v = r.u32(); v != kVersion) {
    throw FormatError("sparse", "unsupported sparse index version " + std::to_string(v));
  }

  SparseIndex index;
  index.params_.k1 = r.f64();
  index.params_.b = r.f64();
  index.params_.epsilon = r.f64();
  index.params_.validate();
  index.corpus_digest_ = r.str();
  const auto n_docs = r.u64();
  if (n_docs == 0 || n_docs > std::numeric_limits<PassageId>::max()) {
    throw FormatError("sparse", "implausible corpus size " + std::to_string(n_docs));
  }
  index.lengths_.resize(n_docs);
  for (auto& len : index.lengths_) len = r.u32();

  const auto n_terms = r.u64();
  for (std::uint64_t t = 0; t < n_terms; ++t) {
    auto term = r.str();
    const auto n_postings = r.u64();
    if (n_postings > n_docs) throw FormatError("sparse", "posting list longer than corpus");
    Term entry;
    entry.postings.resize(n_postings);
    for (auto& p : entry.postings) {
      p.passage = r.u32();
      p.tf = r.u32();
      if (p.passage >= n_docs) throw FormatError("sparse", "posting id out of range");
    }
    index.terms_.emplace(std::move(term), std::move(entry));
  }
  r.expect_end();
  index.finalize();
  return index;
}

}  // namespace kgr
