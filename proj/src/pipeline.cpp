#include "kgr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "http_client.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

std::unordered_set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end())};
}

}  // namespace

void RetrievalQuery::validate() const {
  if (trim(question).empty()) throw InvalidArgument("retrieve", "question must be non-empty");
  if (trim(choice).empty()) throw InvalidArgument("retrieve", "choice must be non-empty");
}

std::string_view to_string(FilterMode mode) noexcept {
  return mode == FilterMode::csqa ? "csqa" : "none";
}

void PipelineConfig::validate() const {
  if (n_per_retriever == 0) throw InvalidArgument("config", "N must be >= 1");
  if (top_k == 0) throw InvalidArgument("config", "K must be >= 1");
}

PipelineConfig PipelineConfig::commonsense_qa() {
  return {.n_per_retriever = 100, .top_k = 100, .rerank_enabled = true,
          .filter_mode = FilterMode::csqa};
}

PipelineConfig PipelineConfig::openbook_qa() {
  return {.n_per_retriever = 100, .top_k = 20, .rerank_enabled = true,
          .filter_mode = FilterMode::none};
}

std::vector<double> LexicalRerankScorer::score_pairs(std::string_view query,
                                                     std::span<const std::string> passages) const {
  const auto query_tokens = token_set(query);
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& text : passages) {
    if (query_tokens.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto passage_tokens = token_set(text);
    std::size_t hits = 0;
    for (const auto& tok : query_tokens) hits += passage_tokens.count(tok);
    out.push_back(static_cast<double>(hits) / static_cast<double>(query_tokens.size()));
  }
  return out;
}

std::vector<double> ConstantRerankScorer::score_pairs(std::string_view,
                                                      std::span<const std::string> passages) const {
  return std::vector<double>(passages.size(), value_);
}

std::string ConstantRerankScorer::name() const {
  auto j = nlohmann::json(value_);
  return "stub:constant:" + j.dump();
}

HttpRerankScorer::HttpRerankScorer(std::string endpoint, std::size_t max_batch)
    : endpoint_(std::move(endpoint)), max_batch_(max_batch) {
  if (max_batch_ == 0) throw InvalidArgument("scorer", "max_batch must be > 0");
}

std::vector<double> HttpRerankScorer::score_pairs(std::string_view query,
                                                  std::span<const std::string> passages) const {
  std::vector<double> out;
  out.reserve(passages.size());
  for (std::size_t start = 0; start < passages.size(); start += max_batch_) {
    auto chunk = passages.subspan(start, std::min(max_batch_, passages.size() - start));
    nlohmann::json request;
    request["query"] = std::string(query);
    request["passages"] = std::vector<std::string>(chunk.begin(), chunk.end());
    nlohmann::json response;
    try {
      response = http::post_json(endpoint_, "/rerank", request);
    } catch (const http::Failure& e) {
      throw ScorerUnavailable(e.what());
    }
    std::vector<double> scores;
    try {
      scores = response.at("scores").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ScorerUnavailable(std::string("malformed /rerank response: ") + e.what());
    }
    if (scores.size() != chunk.size()) throw LengthMismatch("rerank", chunk.size(), scores.size());
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::unique_ptr<RerankScorer> make_rerank_scorer(std::string_view spec) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    return std::make_unique<HttpRerankScorer>(std::string(spec));
  }
  if (spec == "stub" || spec == "stub:lexical") return std::make_unique<LexicalRerankScorer>();
  if (spec == "stub:constant") return std::make_unique<ConstantRerankScorer>();
  if (spec.starts_with("stub:constant:")) {
    const auto text = std::string(spec.substr(14));
    std::size_t pos = 0;
    double v = -1.0;
    try {
      v = std::stod(text, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != text.size() || !(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("scorer", "constant scorer value must lie in [0,1]: '" + text + "'");
    }
    return std::make_unique<ConstantRerankScorer>(v);
  }
  throw InvalidArgument("scorer", "unknown rerank scorer '" + std::string(spec) + "'");
}

std::string make_query_text(const RetrievalQuery& query) {
  return query.question + " " + query.choice;
}

HybridCandidates hybrid_retrieve(const RetrievalQuery& query, const SparseIndex& sparse,
                                 const DenseIndex& dense, const EmbeddingProvider& provider,
                                 std::size_t n) {
  const auto text = make_query_text(query);
  HybridCandidates out;
  out.sparse = sparse.search(text, n);
  auto embedded = provider.embed(std::span<const std::string>(&text, 1), EmbeddingRole::query);
  if (embedded.size() != 1) throw LengthMismatch("embedding", 1, embedded.size());
  out.dense = dense.search(embedded.front(), n);
  return out;
}

std::vector<PassageId> unique_candidates(const HybridCandidates& candidates) {
  std::vector<PassageId> ids;
  std::unordered_set<PassageId> seen;
  for (const auto* list : {&candidates.sparse, &candidates.dense}) {
    for (const auto& sp : *list) {
      if (seen.insert(sp.passage_id).second) ids.push_back(sp.passage_id);
    }
  }
  return ids;
}

std::vector<ScoredPassage> rerank(const RetrievalQuery& query,
                                  std::span<const PassageId> candidates, const Corpus& corpus,
                                  const RerankScorer& scorer) {
  std::vector<PassageId> ids;
  std::unordered_set<PassageId> seen;
  for (auto id : candidates) {
    if (id >= corpus.size()) {
      throw InvalidArgument("rerank", "passage id " + std::to_string(id) + " outside the corpus");
    }
    if (seen.insert(id).second) ids.push_back(id);
  }
  std::vector<std::string> texts;
  texts.reserve(ids.size());
  for (auto id : ids) texts.push_back(corpus[id].text);

  const auto scores = ids.empty() ? std::vector<double>{}
                                  : scorer.score_pairs(make_query_text(query), texts);
  if (scores.size() != ids.size()) throw LengthMismatch("rerank", ids.size(), scores.size());

  std::vector<ScoredPassage> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) throw ScoreOutOfRange(ids[i], scores[i]);
    out.push_back({ids[i], scores[i], Provenance::reranker});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<ScoredPassage> fuse_without_rerank(std::span<const ScoredPassage> sparse,
                                               std::span<const ScoredPassage> dense) {
  if (sparse.empty()) throw EmptyList("sparse");
  if (dense.empty()) throw EmptyList("dense");

  auto lowest = [](std::span<const ScoredPassage> list) {
    double m = list.front().score;
    for (const auto& sp : list) m = std::min(m, sp.score);
    return m;
  };
  const double sparse_floor = lowest(sparse);
  const double dense_floor = lowest(dense);

  struct Pair {
    std::optional<double> sparse;
    std::optional<double> dense;
  };
  std::vector<PassageId> order;
  std::unordered_map<PassageId, Pair> by_id;
  for (const auto& sp : sparse) {
    auto [it, fresh] = by_id.try_emplace(sp.passage_id);
    if (fresh) order.push_back(sp.passage_id);
    if (!it->second.sparse) it->second.sparse = sp.score;
  }
  for (const auto& sp : dense) {
    auto [it, fresh] = by_id.try_emplace(sp.passage_id);
    if (fresh) order.push_back(sp.passage_id);
    if (!it->second.dense) it->second.dense = sp.score;
  }

  std::vector<ScoredPassage> out;
  out.reserve(order.size());
  for (auto id : order) {
    const auto& p = by_id.at(id);
    const double s = p.sparse.value_or(sparse_floor);
    const double d = p.dense.value_or(dense_floor);
    out.push_back({id, (s + d) / 2.0, Provenance::fused});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<ScoredPassage> filter_csqa(std::span<const ScoredPassage> ranked,
                                       const Corpus& corpus,
                                       std::span<const std::string> all_choices) {
  std::unordered_set<std::string> choice_tokens;
  for (const auto& c : all_choices) {
    for (auto& tok : tokenize(c)) choice_tokens.insert(std::move(tok));
  }
  std::vector<ScoredPassage> out;
  for (const auto& sp : ranked) {
    const auto& passage = corpus[sp.passage_id];
    if (passage.source.relation == "RelatedTo") continue;
    const auto tokens = tokenize(passage.text);
    const bool overlaps = std::any_of(tokens.begin(), tokens.end(),
                                      [&](const auto& t) { return choice_tokens.count(t) > 0; });
    if (overlaps) out.push_back(sp);
  }
  return out;
}

std::vector<ScoredPassage> select_top_k(std::span<const ScoredPassage> ranked, std::size_t k) {
  const auto n = std::min(k, ranked.size());
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n)};
}

RetrievalPipeline::RetrievalPipeline(const Corpus& corpus, const SparseIndex& sparse,
                                     const DenseIndex& dense, const EmbeddingProvider& provider,
                                     const RerankScorer* scorer, PipelineConfig config)
    : corpus_(corpus),
      sparse_(sparse),
      dense_(dense),
      provider_(provider),
      scorer_(scorer),
      config_(config) {
  config_.validate();
  if (corpus_.empty()) throw EmptyCorpus("retrieve");
  if (sparse_.corpus_digest() != corpus_.digest()) {
    throw DigestMismatch("sparse index", corpus_.digest(), sparse_.corpus_digest());
  }
  if (dense_.corpus_digest() != corpus_.digest()) {
    throw DigestMismatch("dense index", corpus_.digest(), dense_.corpus_digest());
  }
  if (config_.rerank_enabled && scorer_ == nullptr) {
    throw InvalidArgument("retrieve", "reranking is enabled but no scorer was supplied");
  }
}

std::vector<ScoredPassage> RetrievalPipeline::retrieve_for_choice(
    const RetrievalQuery& query, std::span<const std::string> all_choices) const {
  query.validate();
  auto candidates = hybrid_retrieve(query, sparse_, dense_, provider_, config_.n_per_retriever);

  std::vector<ScoredPassage> ranked;
  if (config_.rerank_enabled) {
    ranked = rerank(query, unique_candidates(candidates), corpus_, *scorer_);
  } else {
    ranked = fuse_without_rerank(candidates.sparse, candidates.dense);
  }

  if (config_.filter_mode == FilterMode::csqa) {
    if (all_choices.empty()) {
      ranked = filter_csqa(ranked, corpus_, std::span<const std::string>(&query.choice, 1));
    } else {
      ranked = filter_csqa(ranked, corpus_, all_choices);
    }
  }
  return select_top_k(ranked, config_.top_k);
}

}  // namespace kgr
