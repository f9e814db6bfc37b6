#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgr/types.hpp"

namespace kgr {

inline constexpr std::string_view kDefaultSeparator = " </s> ";

struct McqaExample {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::optional<std::size_t> gold;

  /// Throws InvalidArgument: needs >= 2 choices and a gold index in range.
  void validate() const;
};

/// Dataset lines: {"id": str, "question": str, "choices": [str], "gold": int|null}.
std::vector<McqaExample> read_dataset(std::istream& in);
std::vector<McqaExample> read_dataset(const std::filesystem::path& path);

/// question + sep + choice + (sep + passage)*.
std::string assemble_reader_input(const McqaExample& example, std::size_t choice_index,
                                  std::span<const std::string> passages,
                                  std::string_view separator);

struct Prediction {
  std::size_t predicted_index = 0;
  std::vector<double> probabilities;
};

/// Softmax (max-subtracted) over the raw choice scores; argmax on raw
/// scores with the lowest index winning ties. Throws LengthMismatch.
Prediction predict(const McqaExample& example, std::span<const double> scores);

/// Reader model boundary: one rendered input per choice in, one raw score
/// per choice out.
class ChoiceScorer {
 public:
  virtual ~ChoiceScorer() = default;

  virtual std::vector<double> score(std::span<const std::string> inputs) const = 0;
  virtual std::string name() const = 0;
};

/// Splits each rendered input on the separator and scores the choice by
/// how many passage tokens (with multiplicity) belong to the choice's token
/// set. Depends only on the input's own content, never on its position.
class LexicalChoiceScorer final : public ChoiceScorer {
 public:
  explicit LexicalChoiceScorer(std::string separator = std::string(kDefaultSeparator))
      : separator_(std::move(separator)) {}

  std::vector<double> score(std::span<const std::string> inputs) const override;
  std::string name() const override { return "stub:lexical"; }

 private:
  std::string separator_;
};

/// POST {endpoint}/score with {"inputs": [...]} -> {"scores": [...]}.
class HttpChoiceScorer final : public ChoiceScorer {
 public:
  explicit HttpChoiceScorer(std::string endpoint) : endpoint_(std::move(endpoint)) {}

  std::vector<double> score(std::span<const std::string> inputs) const override;
  std::string name() const override { return endpoint_; }

 private:
  std::string endpoint_;
};

std::unique_ptr<ChoiceScorer> make_choice_scorer(std::string_view spec,
                                                 std::string_view separator);

struct RetrievedPassages {
  std::vector<PassageId> ids;
  std::vector<std::string> texts;
};

/// Supplies P_K for (example, choice index).
using PassageSource = std::function<RetrievedPassages(const McqaExample&, std::size_t)>;

struct ExampleResult {
  std::string id;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::vector<double> raw_scores;
  std::vector<double> probabilities;
  std::vector<std::vector<PassageId>> passages_used;  // per choice
  std::vector<std::string> reader_inputs;             // per choice
};

struct EvaluationResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::vector<ExampleResult> examples;
};

/// Scores every example and reports accuracy. Examples are processed in
/// parallel; results keep dataset order. Throws MissingGold before any
/// scoring when an example lacks a gold index.
EvaluationResult evaluate(std::span<const McqaExample> dataset, const PassageSource& passages,
                          const ChoiceScorer& scorer, std::string_view separator);

/// Writes predictions.jsonl, reader_inputs.jsonl and summary.json into
/// out_dir. `summary_extra` is merged into the summary record (a JSON
/// object serialized as text).
void write_evaluation(const std::filesystem::path& out_dir, const EvaluationResult& result,
                      std::string_view summary_extra_json);

}  // namespace kgr
