// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. argv[1] is the path to the kgr executable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgr/corpus.hpp"
#include "kgr/dense_index.hpp"
#include "kgr/embedding.hpp"
#include "kgr/pipeline.hpp"
#include "kgr/qa_harness.hpp"
#include "kgr/sparse_index.hpp"
#include "kgr/text.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace kgr;
using Clock = std::chrono::steady_clock;

// A criterion returns an empty string on success, otherwise the reason.
struct Criterion {
  std::string name;
  double time_limit_s;  // <= 0 means no limit
  std::function<std::string()> check;
};

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  return {std::istream_iterator<std::string>(in), {}};
}

Corpus corpus_of(const std::vector<Triplet>& triplets) {
  return build_corpus(triplets, RelationTemplateTable::conceptnet());
}

Corpus toy_corpus() {
  std::ifstream in(testing::data_dir() / "toy_kg.tsv");
  return corpus_of(parse_triplets(in));
}

std::string template_totality() {
  const auto& table = RelationTemplateTable::conceptnet();
  if (table.size() != 31) return "table has " + std::to_string(table.size()) + " relations";
  for (const auto& [rel, phrase] : table) {
    auto s = linearize({"head", rel, "tail"}, table);
    if (s != "head " + phrase + " tail") return "bad linearization for " + rel + ": " + s;
  }
  auto s = linearize({"hair brush", "AtLocation", "hair"}, table);
  if (s != "hair brush is at location of hair") return "example gave '" + s + "'";
  return {};
}

std::string bm25_oracle() {
  std::vector<std::pair<std::vector<Triplet>, std::vector<std::string>>> cases;

  // 1: the toy KG.
  {
    std::ifstream in(testing::data_dir() / "toy_kg.tsv");
    cases.push_back({parse_triplets(in),
                     {"where is a hair brush kept", "violin spruce wood", "what causes fear",
                      "umbrella umbrella dry", "penguin flying airplane"}});
  }
  // 2: animals, short passages.
  cases.push_back({{{"dog", "IsA", "animal"}, {"cat", "IsA", "animal"}, {"dog", "CapableOf", "barking"},
                    {"cat", "CapableOf", "purring"}, {"fish", "AtLocation", "water"},
                    {"bird", "CapableOf", "flying"}, {"dog", "Desires", "bone"}},
                   {"dog", "animal", "cat barking", "unicorn"}});
  // 3: a term in most passages gets a negative raw idf and the floor applies.
  cases.push_back({{{"common word", "IsA", "alpha"}, {"common word", "IsA", "beta"},
                    {"common word", "IsA", "gamma"}, {"common", "PartOf", "delta"},
                    {"rare", "IsA", "epsilon"}},
                   {"common", "common rare", "word alpha", "is a"}});
  // 4: long and repetitive passages stress length normalization.
  cases.push_back({{{"red red red apple", "HasProperty", "red"}, {"apple", "HasProperty", "red"},
                    {"green apple pie with apple sauce and apple juice", "IsA", "dessert"},
                    {"sauce", "MadeOf", "tomato"}, {"juice", "UsedFor", "drinking"},
                    {"pie", "AtLocation", "bakery"}},
                   {"red apple", "apple apple", "apple sauce juice", "bakery pie", "drinking"}});
  // 5: 200 generated passages over a 30-word vocabulary.
  {
    std::mt19937_64 rng(4242);
    std::vector<Triplet> t;
    for (int i = 0; i < 200; ++i) {
      t.push_back({testing::random_sentence(rng, 1, 6, 30) + " n" + std::to_string(i), "RelatedTo",
                   testing::random_sentence(rng, 1, 10, 30)});
    }
    std::vector<std::string> q;
    for (int i = 0; i < 6; ++i) q.push_back(testing::random_sentence(rng, 1, 5, 35));
    cases.push_back({t, q});
  }

  std::size_t queries = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    auto corpus = corpus_of(cases[c].first);
    if (corpus.size() > 200) return "corpus too large";
    auto index = SparseIndex::build(corpus);
    std::vector<std::vector<std::string>> docs;
    for (const auto& p : corpus.passages()) docs.push_back(split_words(p.text));
    for (const auto& q : cases[c].second) {
      ++queries;
      auto expected = oracle::bm25_scores(docs, split_words(q), 1.5, 0.75, 0.25);
      auto order = oracle::stable_argsort_desc(expected);
      auto got = index.search(q, corpus.size());
      if (got.size() != corpus.size()) return "short result list";
      for (std::size_t r = 0; r < got.size(); ++r) {
        if (got[r].passage_id != order[r]) {
          return "corpus " + std::to_string(c + 1) + " query '" + q + "': rank " + std::to_string(r) +
                 " differs";
        }
        if (std::abs(got[r].score - expected[order[r]]) > 1e-9) {
          return "corpus " + std::to_string(c + 1) + " query '" + q + "': score differs";
        }
      }
    }
  }
  if (queries < 20) return "only " + std::to_string(queries) + " queries";
  return {};
}

std::string dense_exactness() {
  std::mt19937_64 rng(99);
  std::normal_distribution<float> g;
  std::uniform_int_distribution<int> small(-2, 2);
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t count = 1 + rng() % 10000;
    const std::size_t dim = 1 + rng() % 64;
    const bool quantized = inst % 4 == 0;  // small integers force exact ties
    std::vector<Passage> passages(count);
    for (std::size_t i = 0; i < count; ++i) {
      passages[i] = {static_cast<PassageId>(i), "p", {"p", "IsA", "x"}};
    }
    Corpus corpus(std::move(passages), {});
    VectorMatrix m{count, dim, std::vector<float>(count * dim)};
    for (auto& v : m.values) v = quantized ? static_cast<float>(small(rng)) : g(rng);
    std::vector<float> q(dim);
    for (auto& v : q) v = quantized ? static_cast<float>(small(rng)) : g(rng);
    const std::size_t n = 1 + rng() % std::min<std::size_t>(count, 200);

    auto expected_scores = oracle::inner_products(m.values, dim, q);
    auto order = oracle::stable_argsort_desc(expected_scores);
    auto index = DenseIndex::from_vectors(corpus, std::move(m), "random");
    auto got = index.search(q, n);
    if (got.size() != n) return "instance " + std::to_string(inst) + ": wrong length";
    for (std::size_t r = 0; r < n; ++r) {
      if (got[r].passage_id != order[r] || got[r].score != expected_scores[order[r]]) {
        return "instance " + std::to_string(inst) + ": rank " + std::to_string(r) + " differs";
      }
    }
  }
  return {};
}

std::vector<ScoredPassage> random_list(std::mt19937_64& rng, std::size_t len, PassageId range,
                                       Provenance prov) {
  std::set<PassageId> ids;
  while (ids.size() < len) ids.insert(static_cast<PassageId>(rng() % range));
  std::uniform_real_distribution<double> u(-10, 30);
  std::vector<ScoredPassage> out;
  for (auto id : ids) out.push_back({id, rng() % 3 == 0 ? std::round(u(rng)) : u(rng), prov});
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::string fusion_rule() {
  std::mt19937_64 rng(1234);
  std::size_t discrepancies = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const PassageId range = 1 + static_cast<PassageId>(rng() % 40);
    auto s = random_list(rng, 1 + rng() % std::min<PassageId>(range, 20), range, Provenance::sparse);
    auto d = random_list(rng, 1 + rng() % std::min<PassageId>(range, 20), range, Provenance::dense);
    std::vector<std::pair<unsigned, double>> sp, dp;
    for (const auto& x : s) sp.emplace_back(x.passage_id, x.score);
    for (const auto& x : d) dp.emplace_back(x.passage_id, x.score);
    auto expected = oracle::fuse(sp, dp);
    auto got = fuse_without_rerank(s, d);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].passage_id == expected[i].first && got[i].score == expected[i].second &&
             got[i].provenance == Provenance::fused;
    }
    discrepancies += !same;
  }
  return discrepancies ? std::to_string(discrepancies) + " discrepancies" : "";
}

std::string filter_soundness() {
  std::mt19937_64 rng(555);
  const std::vector<std::string> relations{"RelatedTo", "IsA", "AtLocation", "UsedFor", "Synonym"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Triplet> t;
    const auto size = 5 + rng() % 60;
    for (std::size_t i = 0; i < size; ++i) {
      t.push_back({testing::random_sentence(rng, 1, 3, 25) + " h" + std::to_string(i),
                   relations[rng() % relations.size()], testing::random_sentence(rng, 1, 3, 25)});
    }
    auto corpus = corpus_of(t);
    std::vector<ScoredPassage> ranked;
    for (PassageId id = 0; id < corpus.size(); ++id) {
      if (rng() % 2) ranked.push_back({id, 1.0 / (1 + id), Provenance::reranker});
    }
    std::vector<std::string> choices;
    for (int c = 0; c < 5; ++c) choices.push_back(testing::random_sentence(rng, 1, 2, 30));
    std::set<std::string> choice_tokens;
    for (const auto& c : choices) {
      for (auto& tok : tokenize(c)) choice_tokens.insert(tok);
    }

    auto once = filter_csqa(ranked, corpus, choices);
    for (const auto& sp : once) {
      const auto& p = corpus[sp.passage_id];
      if (p.source.relation == "RelatedTo") return "RelatedTo survived in case " + std::to_string(trial);
      auto toks = tokenize(p.text);
      if (std::none_of(toks.begin(), toks.end(), [&](auto& x) { return choice_tokens.count(x) > 0; })) {
        return "no-overlap passage survived in case " + std::to_string(trial);
      }
    }
    if (filter_csqa(once, corpus, choices) != once) return "not idempotent in case " + std::to_string(trial);
  }
  return {};
}

std::string end_to_end_recall() {
  auto corpus = toy_corpus();
  auto sparse = SparseIndex::build(corpus);
  HashingEmbeddingProvider provider;
  auto dense = DenseIndex::build(corpus, provider);
  LexicalRerankScorer scorer;
  PipelineConfig cfg{.n_per_retriever = 10, .top_k = 5, .rerank_enabled = true,
                     .filter_mode = FilterMode::csqa};
  RetrievalPipeline pipeline(corpus, sparse, dense, provider, &scorer, cfg);

  std::ifstream in(testing::data_dir() / "toy_questions.jsonl");
  std::size_t hits = 0, oracle_hits = 0, total = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    const auto planted = j.at("planted_passage").get<PassageId>();
    const auto choices = j.at("choices").get<std::vector<std::string>>();
    RetrievalQuery q{j.at("question").get<std::string>(), choices.at(j.at("gold").get<std::size_t>())};
    ++total;

    // Exhaustive: every passage is a candidate.
    std::vector<PassageId> all(corpus.size());
    std::iota(all.begin(), all.end(), 0);
    auto exhaustive = select_top_k(filter_csqa(rerank(q, all, corpus, scorer), corpus, choices), cfg.top_k);
    oracle_hits += std::any_of(exhaustive.begin(), exhaustive.end(),
                               [&](const auto& sp) { return sp.passage_id == planted; });

    auto pk = pipeline.retrieve_for_choice(q, choices);
    hits += std::any_of(pk.begin(), pk.end(), [&](const auto& sp) { return sp.passage_id == planted; });
  }
  if (total != 10) return "expected 10 examples, found " + std::to_string(total);
  if (oracle_hits < 9) return "exhaustive scoring finds only " + std::to_string(oracle_hits) + "/10";
  if (hits < 9) return "planted passage in P_K for " + std::to_string(hits) + "/10";
  std::cout << "      planted passage in P_K for " << hits << "/10 (exhaustive " << oracle_hits << "/10)\n";
  return {};
}

class FixedScorer final : public ChoiceScorer {
 public:
  std::vector<double> score(std::span<const std::string> inputs) const override {
    std::vector<double> out(inputs.size(), 0.0);
    out[0] = 1.0;
    return out;
  }
  std::string name() const override { return "index-0"; }
};

std::string harness_arithmetic() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    McqaExample ex{"e", "q", std::vector<std::string>(n, "c"), 0};
    std::vector<double> s(n), shifted(n);
    const double shift = u(rng) * 5;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      shifted[i] = s[i] + shift;
    }
    auto a = predict(ex, s), b = predict(ex, shifted);
    if (a.predicted_index != b.predicted_index) return "argmax moved under shift";
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(a.probabilities[i] - b.probabilities[i]) > 1e-9) return "softmax not shift invariant";
    }
  }

  // Four examples, scorer always picks choice 0, golds 0/3/1/0: 2 of 4 by hand.
  std::vector<McqaExample> four;
  for (std::size_t g : {0, 3, 1, 0}) four.push_back({"f" + std::to_string(four.size()), "q", {"a", "b", "c", "d"}, g});
  auto r4 = evaluate(four, [](const McqaExample&, std::size_t) { return RetrievedPassages{}; }, FixedScorer(),
                     kDefaultSeparator);
  if (r4.correct != 2 || r4.accuracy != 0.5) return "4-example accuracy " + std::to_string(r4.accuracy);

  // Twenty examples over choices red/green/blue. The winning choice i % 3
  // gets a passage repeating its word twice, the others once. Golds agree
  // with the winner for examples 0..12 and not for 13..19: 13 of 20.
  const std::vector<std::string> words{"red", "green", "blue"};
  std::vector<McqaExample> twenty;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t gold = i < 13 ? i % 3 : (i + 1) % 3;
    twenty.push_back({"t" + std::to_string(i), "which colour", words, gold});
  }
  PassageSource src = [&](const McqaExample& ex, std::size_t c) {
    const std::size_t i = std::stoul(ex.id.substr(1));
    const auto& w = words[c];
    return RetrievedPassages{{static_cast<PassageId>(c)}, {c == i % 3 ? w + " " + w : w}};
  };
  auto r20 = evaluate(twenty, src, LexicalChoiceScorer(), kDefaultSeparator);
  if (r20.correct != 13 || r20.accuracy != 0.65) return "20-example accuracy " + std::to_string(r20.accuracy);
  return {};
}

std::string determinism(const std::string& exe) {
  testing::TempDir dir;
  const auto data = testing::data_dir();
  auto run_once = [&](const std::string& tag) -> std::string {
    const auto d = (dir / tag).string();
    std::filesystem::create_directories(d);
    const std::string corpus = d + "/corpus.jsonl", sparse = d + "/sparse.idx", dense = d + "/dense.idx";
    const std::string flags = " --corpus " + corpus + " --sparse " + sparse + " --dense " + dense +
                              " --provider stub:hashing --scorer stub:lexical";
    const std::vector<std::string> cmds{
        exe + " build-corpus --input " + (data / "toy_kg.tsv").string() + " --output " + corpus,
        exe + " index-sparse --corpus " + corpus + " --output " + sparse,
        exe + " index-dense --corpus " + corpus + " --output " + dense + " --provider stub:hashing",
        exe + " retrieve" + flags + " --question 'Where would you usually keep a hair brush?'" +
            " --choice 'bathroom drawer' --filter csqa --choices " + (data / "toy_choices.txt").string() +
            " --output " + d + "/retrieve.jsonl",
        exe + " eval" + flags + " -N 10 -K 5 --filter csqa --dataset " +
            (data / "toy_questions.jsonl").string() + " --choice-scorer stub:lexical --out " + d + "/eval",
    };
    for (const auto& c : cmds) {
      if (std::system((c + " > /dev/null 2>&1").c_str()) != 0) return "command failed: " + c;
    }
    return {};
  };
  for (const char* tag : {"a", "b"}) {
    if (auto e = run_once(tag); !e.empty()) return e;
  }
  for (const std::string f : {"corpus.jsonl", "sparse.idx", "dense.idx", "retrieve.jsonl",
                              "eval/predictions.jsonl", "eval/reader_inputs.jsonl", "eval/summary.json"}) {
    const auto a = testing::read_file(dir / ("a/" + f));
    if (a.empty()) return f + " is empty";
    if (a != testing::read_file(dir / ("b/" + f))) return f + " differs between runs";
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: kgr_acceptance <path-to-kgr>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const std::vector<Criterion> criteria{
      {"template totality", 1.0, template_totality},
      {"bm25 oracle", 10.0, bm25_oracle},
      {"dense exactness", 60.0, dense_exactness},
      {"fusion rule", 0, fusion_rule},
      {"filter soundness + idempotence", 0, filter_soundness},
      {"end-to-end recall", 5.0, end_to_end_recall},
      {"harness arithmetic", 0, harness_arithmetic},
      {"determinism", 0, [&] { return determinism(exe); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    std::string reason;
    try {
      reason = c.check();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (reason.empty() && c.time_limit_s > 0 && secs >= c.time_limit_s) {
      reason = "took " + std::to_string(secs) + " s, limit " + std::to_string(c.time_limit_s) + " s";
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (reason.empty() ? "PASS" : "FAIL") << "  " << c.name << "  (" << timing << ")";
    if (!reason.empty()) std::cout << "  " << reason;
    std::cout << '\n';
    failures += !reason.empty();
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " failed" : "acceptance: all passed")
            << '\n';
  return failures ? 1 : 0;
}
