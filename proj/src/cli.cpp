#include "kgr/cli.hpp"

#include <omp.h>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgr/corpus.hpp"
#include "kgr/dense_index.hpp"
#include "kgr/digest.hpp"
#include "kgr/embedding.hpp"
#include "kgr/error.hpp"
#include "kgr/pipeline.hpp"
#include "kgr/qa_harness.hpp"
#include "kgr/sparse_index.hpp"
#include "kgr/text.hpp"

#ifndef KGR_VERSION
#define KGR_VERSION "0.0.0"
#endif

namespace kgr::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Thrown for flag combinations CLI11 cannot express; reported as exit 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  int verbosity = 0;

  void info(const std::string& msg) const {
    if (verbosity > 0) err << "[kgr] " << msg << '\n';
  }
};

void write_ranked(std::ostream& os, std::span<const ScoredPassage> ranked, const Corpus* corpus) {
  std::size_t rank = 1;
  for (const auto& sp : ranked) {
    ordered_json j;
    j["rank"] = rank++;
    j["passage_id"] = sp.passage_id;
    j["score"] = sp.score;
    j["provenance"] = to_string(sp.provenance);
    if (corpus != nullptr) j["text"] = (*corpus)[sp.passage_id].text;
    os << j.dump() << '\n';
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("retrieve", "cannot open choices file " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  return lines;
}

FilterMode parse_filter(const std::string& name) {
  return name == "csqa" ? FilterMode::csqa : FilterMode::none;
}

void warn_on_fingerprint(const Context& ctx, const DenseIndex& dense,
                         const EmbeddingProvider& provider) {
  const auto fp = provider.fingerprint();
  if (fp != dense.fingerprint()) {
    ctx.err << "[kgr] warning: query provider '" << fp << "' differs from the provider the dense "
            << "index was built with ('" << dense.fingerprint() << "')\n";
  }
}

// Shared flags of `retrieve` and `eval`.
struct PipelineFlags {
  std::string corpus;
  std::string sparse;
  std::string dense;
  std::string provider;
  std::string scorer;
  std::size_t n = 100;
  std::size_t k = 100;
  bool no_rerank = false;
  std::string filter = "none";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sparse", sparse, "Sparse index file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--dense", dense, "Dense index file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--provider", provider,
                    "Query embedding provider: http://host:port, stub:hashing[:dim], or a "
                    "JSONL embedding table")
        ->required();
    cmd->add_option("--scorer", scorer,
                    "Reranker: http://host:port, stub:lexical, stub:constant[:v]");
    cmd->add_option("-N,--n-per-retriever", n, "Passages per retriever")
        ->check(CLI::PositiveNumber);
    cmd->add_option("-K,--top-k", k, "Passages kept after reranking")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-rerank", no_rerank, "Fuse retriever scores instead of reranking");
    cmd->add_option("--filter", filter, "Post-rerank filter")
        ->check(CLI::IsMember({"none", "csqa"}));
  }

  void validate() const {
    if (!no_rerank && scorer.empty()) throw UsageError("--scorer is required unless --no-rerank");
  }

  PipelineConfig config() const {
    return {.n_per_retriever = n, .top_k = k, .rerank_enabled = !no_rerank,
            .filter_mode = parse_filter(filter)};
  }
};

// Loaded artifacts for one pipeline run.
struct LoadedPipeline {
  Corpus corpus;
  SparseIndex sparse;
  DenseIndex dense;
  std::unique_ptr<EmbeddingProvider> provider;
  std::unique_ptr<RerankScorer> scorer;

  static LoadedPipeline load(const PipelineFlags& f, const Context& ctx) {
    ctx.info("loading corpus " + f.corpus);
    auto corpus = read_corpus(f.corpus);
    ctx.info("loading indexes");
    auto sparse = SparseIndex::load(f.sparse);
    auto dense = DenseIndex::load(f.dense);
    auto provider = make_embedding_provider(f.provider);
    auto scorer = f.no_rerank ? nullptr : make_rerank_scorer(f.scorer);
    return {std::move(corpus), std::move(sparse), std::move(dense), std::move(provider),
            std::move(scorer)};
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph triplet retrieval for multi-choice QA", "kgr"};
  app.set_version_flag("--version", KGR_VERSION);
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
  app.require_subcommand(1);

  Context ctx{out, err};
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  auto* verbose = app.add_flag("-v,--verbose", "Progress messages on stderr");

  std::function<void()> action;

  // build-corpus
  struct {
    std::string input, output;
    bool normalize = false;
  } bc;
  auto* build_cmd = app.add_subcommand("build-corpus", "Linearize a triplet TSV into a corpus");
  build_cmd->add_option("--input", bc.input, "Triplet TSV")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--output", bc.output, "Corpus file")->required();
  build_cmd->add_flag("--normalize-underscores", bc.normalize,
                      "Replace '_' with ' ' in entity strings");
  build_cmd->callback([&] {
    action = [&] {
      std::ifstream in(bc.input);
      if (!in) throw FormatError("corpus", "cannot open " + bc.input);
      auto triplets = parse_triplets(in, bc.normalize);
      ctx.info("parsed " + std::to_string(triplets.size()) + " triplets");
      auto corpus = build_corpus(triplets, RelationTemplateTable::conceptnet(),
                                 file_sha256(bc.input));
      write_corpus(corpus, bc.output);
      ctx.info("wrote " + std::to_string(corpus.size()) + " passages to " + bc.output);
    };
  });

  // index-sparse
  struct {
    std::string corpus, output;
    Bm25Params params;
  } is;
  auto* isparse_cmd = app.add_subcommand("index-sparse", "Build the BM25 index");
  isparse_cmd->add_option("--corpus", is.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  isparse_cmd->add_option("--output", is.output, "Index file")->required();
  isparse_cmd->add_option("--k1", is.params.k1, "Term-frequency saturation")->capture_default_str();
  isparse_cmd->add_option("--b", is.params.b, "Length normalization")->capture_default_str();
  isparse_cmd->add_option("--epsilon", is.params.epsilon, "IDF floor fraction")->capture_default_str();
  isparse_cmd->callback([&] {
    try {
      is.params.validate();
    } catch (const InvalidArgument& e) {
      throw CLI::ValidationError(e.what());
    }
    action = [&] {
      auto corpus = read_corpus(is.corpus);
      auto index = SparseIndex::build(corpus, is.params);
      index.save(is.output);
      ctx.info("indexed " + std::to_string(index.vocabulary_size()) + " terms");
    };
  });

  // search-sparse
  struct {
    std::string index, query, corpus;
    std::size_t n = 10;
  } ss;
  auto* ssparse_cmd = app.add_subcommand("search-sparse", "Query the BM25 index");
  ssparse_cmd->add_option("--index", ss.index, "Index file")->required()->check(CLI::ExistingFile);
  ssparse_cmd->add_option("--query", ss.query, "Query text")->required();
  ssparse_cmd->add_option("-n", ss.n, "Results")->check(CLI::PositiveNumber);
  ssparse_cmd->add_option("--corpus", ss.corpus, "Corpus file, to print passage text")
      ->check(CLI::ExistingFile);
  ssparse_cmd->callback([&] {
    action = [&] {
      auto index = SparseIndex::load(ss.index);
      std::optional<Corpus> corpus;
      if (!ss.corpus.empty()) {
        corpus = read_corpus(ss.corpus);
        if (corpus->digest() != index.corpus_digest()) {
          throw DigestMismatch("sparse index", corpus->digest(), index.corpus_digest());
        }
      }
      write_ranked(out, index.search(ss.query, ss.n), corpus ? &*corpus : nullptr);
    };
  });

  // index-dense
  struct {
    std::string corpus, output, vectors, provider;
    std::size_t batch = 64;
  } id;
  auto* idense_cmd = app.add_subcommand("index-dense", "Build the inner-product index");
  idense_cmd->add_option("--corpus", id.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  idense_cmd->add_option("--output", id.output, "Index file")->required();
  auto* vec_opt = idense_cmd->add_option("--vectors", id.vectors, "Precomputed passage vector file")
                      ->check(CLI::ExistingFile);
  auto* prov_opt = idense_cmd->add_option("--provider", id.provider, "Embedding provider");
  vec_opt->excludes(prov_opt);
  idense_cmd->add_option("--batch-size", id.batch, "Texts per embedding request")
      ->check(CLI::PositiveNumber);
  idense_cmd->callback([&] {
    if (id.vectors.empty() == id.provider.empty()) {
      throw CLI::ValidationError("exactly one of --vectors or --provider is required");
    }
    action = [&] {
      auto corpus = read_corpus(id.corpus);
      if (!id.vectors.empty()) {
        auto vectors = read_vector_file(id.vectors);
        auto fp = "vectors:" + file_sha256(id.vectors).substr(0, 16);
        DenseIndex::from_vectors(corpus, std::move(vectors), fp).save(id.output);
      } else {
        auto provider = make_embedding_provider(id.provider);
        DenseIndex::build(corpus, *provider, id.batch).save(id.output);
      }
    };
  });

  // search-dense
  struct {
    std::string index, query, provider, corpus;
    std::size_t n = 10;
  } sd;
  auto* sdense_cmd = app.add_subcommand("search-dense", "Query the inner-product index");
  sdense_cmd->add_option("--index", sd.index, "Index file")->required()->check(CLI::ExistingFile);
  sdense_cmd->add_option("--query", sd.query, "Query text")->required();
  sdense_cmd->add_option("--provider", sd.provider, "Query embedding provider")->required();
  sdense_cmd->add_option("-n", sd.n, "Results")->check(CLI::PositiveNumber);
  sdense_cmd->add_option("--corpus", sd.corpus, "Corpus file, to print passage text")
      ->check(CLI::ExistingFile);
  sdense_cmd->callback([&] {
    action = [&] {
      auto index = DenseIndex::load(sd.index);
      auto provider = make_embedding_provider(sd.provider);
      warn_on_fingerprint(ctx, index, *provider);
      std::optional<Corpus> corpus;
      if (!sd.corpus.empty()) {
        corpus = read_corpus(sd.corpus);
        if (corpus->digest() != index.corpus_digest()) {
          throw DigestMismatch("dense index", corpus->digest(), index.corpus_digest());
        }
      }
      auto q = provider->embed(std::span<const std::string>(&sd.query, 1), EmbeddingRole::query);
      write_ranked(out, index.search(q.at(0), sd.n), corpus ? &*corpus : nullptr);
    };
  });

  // retrieve
  PipelineFlags rf;
  struct {
    std::string question, choice, choices_file, output;
  } rt;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Retrieve P_K for one question/choice");
  rf.add_to(retrieve_cmd);
  retrieve_cmd->add_option("--question", rt.question, "Question text")->required();
  retrieve_cmd->add_option("--choice", rt.choice, "Answer choice")->required();
  retrieve_cmd->add_option("--choices", rt.choices_file,
                           "File with every answer choice, one per line (csqa filter)")
      ->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--output", rt.output, "Write records here instead of stdout");
  retrieve_cmd->callback([&] {
    rf.validate();
    action = [&] {
      auto loaded = LoadedPipeline::load(rf, ctx);
      warn_on_fingerprint(ctx, loaded.dense, *loaded.provider);
      RetrievalPipeline pipeline(loaded.corpus, loaded.sparse, loaded.dense, *loaded.provider,
                                 loaded.scorer.get(), rf.config());
      std::vector<std::string> choices;
      if (!rt.choices_file.empty()) choices = read_lines(rt.choices_file);
      auto ranked = pipeline.retrieve_for_choice({rt.question, rt.choice}, choices);
      if (rt.output.empty()) {
        write_ranked(out, ranked, &loaded.corpus);
      } else {
        std::ofstream os(rt.output, std::ios::binary | std::ios::trunc);
        if (!os) throw FormatError("retrieve", "cannot write " + rt.output);
        write_ranked(os, ranked, &loaded.corpus);
      }
    };
  });

  // eval
  PipelineFlags ef;
  struct {
    std::string dataset, choice_scorer, out_dir;
    std::string separator{kDefaultSeparator};
  } ev;
  auto* eval_cmd = app.add_subcommand("eval", "Retrieve, score and measure accuracy on a dataset");
  ef.add_to(eval_cmd);
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--choice-scorer", ev.choice_scorer, "http://host:port or stub:lexical")
      ->required();
  eval_cmd->add_option("--out", ev.out_dir, "Output directory")->required();
  eval_cmd->add_option("--separator", ev.separator, "Reader input separator")
      ->capture_default_str();
  eval_cmd->callback([&] {
    ef.validate();
    if (ev.separator.empty()) throw CLI::ValidationError("--separator must be non-empty");
    action = [&] {
      auto dataset = read_dataset(std::filesystem::path(ev.dataset));
      auto loaded = LoadedPipeline::load(ef, ctx);
      warn_on_fingerprint(ctx, loaded.dense, *loaded.provider);
      auto config = ef.config();
      RetrievalPipeline pipeline(loaded.corpus, loaded.sparse, loaded.dense, *loaded.provider,
                                 loaded.scorer.get(), config);
      auto choice_scorer = make_choice_scorer(ev.choice_scorer, ev.separator);

      PassageSource source = [&](const McqaExample& ex, std::size_t c) {
        auto ranked = pipeline.retrieve_for_choice({ex.question, ex.choices[c]}, ex.choices);
        RetrievedPassages r;
        for (const auto& sp : ranked) {
          r.ids.push_back(sp.passage_id);
          r.texts.push_back(loaded.corpus[sp.passage_id].text);
        }
        return r;
      };
      ctx.info("evaluating " + std::to_string(dataset.size()) + " examples");
      auto result = evaluate(dataset, source, *choice_scorer, ev.separator);

      ordered_json cfg;
      cfg["n_per_retriever"] = config.n_per_retriever;
      cfg["top_k"] = config.top_k;
      cfg["rerank_enabled"] = config.rerank_enabled;
      cfg["filter"] = to_string(config.filter_mode);
      cfg["separator"] = ev.separator;
      cfg["provider"] = loaded.provider->fingerprint();
      cfg["rerank_scorer"] = loaded.scorer ? loaded.scorer->name() : "";
      cfg["choice_scorer"] = choice_scorer->name();
      cfg["corpus_digest"] = loaded.corpus.digest();
      cfg["dataset_digest"] = file_sha256(ev.dataset);
      ordered_json extra;
      extra["config_digest"] = sha256_hex(cfg.dump());
      extra["config"] = cfg;
      write_evaluation(ev.out_dir, result, extra.dump());
      out << "accuracy " << result.correct << "/" << result.examples.size() << " = "
          << result.accuracy << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  ctx.verbosity = static_cast<int>(verbose->count());
  if (threads > 0) omp_set_num_threads(threads);

  try {
    action();
  } catch (const Error& e) {
    err << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error [runtime]: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace kgr::cli
