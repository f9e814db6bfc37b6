#include "kgr/qa_harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <unordered_set>

#include <json.hpp>

#include "http_client.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

std::vector<std::string_view> split_on(std::string_view text, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + sep.size();
  }
}

}  // namespace

void McqaExample::validate() const {
  if (choices.size() < 2) {
    throw InvalidArgument("dataset", "example '" + id + "' needs at least 2 choices");
  }
  if (gold && *gold >= choices.size()) {
    throw InvalidArgument("dataset", "example '" + id + "' has gold index " +
                                         std::to_string(*gold) + " out of range");
  }
}

std::vector<McqaExample> read_dataset(std::istream& in) {
  std::vector<McqaExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    McqaExample ex;
    try {
      auto j = nlohmann::json::parse(line);
      ex.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                               : std::to_string(line_no);
      ex.question = j.at("question").get<std::string>();
      ex.choices = j.at("choices").get<std::vector<std::string>>();
      if (j.contains("gold") && !j["gold"].is_null()) {
        const auto g = j["gold"].get<long long>();
        if (g < 0) throw InvalidArgument("dataset", "line " + std::to_string(line_no) + ": negative gold");
        ex.gold = static_cast<std::size_t>(g);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("dataset", "line " + std::to_string(line_no) + ": " + e.what());
    }
    ex.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<McqaExample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("dataset", "cannot open " + path.string());
  return read_dataset(in);
}

std::string assemble_reader_input(const McqaExample& example, std::size_t choice_index,
                                  std::span<const std::string> passages,
                                  std::string_view separator) {
  if (choice_index >= example.choices.size()) {
    throw InvalidArgument("eval", "choice index " + std::to_string(choice_index) + " out of range");
  }
  if (separator.empty()) throw InvalidArgument("eval", "separator must be non-empty");
  std::string out = example.question;
  out.append(separator).append(example.choices[choice_index]);
  for (const auto& p : passages) out.append(separator).append(p);
  return out;
}

Prediction predict(const McqaExample& example, std::span<const double> scores) {
  if (scores.size() != example.choices.size()) {
    throw LengthMismatch("eval", example.choices.size(), scores.size());
  }
  Prediction out;
  if (scores.empty()) return out;

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  out.predicted_index = best;

  const double max = scores[best];
  out.probabilities.resize(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.probabilities[i] = std::exp(scores[i] - max);
    total += out.probabilities[i];
  }
  for (auto& p : out.probabilities) p /= total;
  return out;
}

std::vector<double> LexicalChoiceScorer::score(std::span<const std::string> inputs) const {
  std::vector<double> out;
  out.reserve(inputs.size());
  for (const auto& input : inputs) {
    auto parts = split_on(input, separator_);
    if (parts.size() < 2) {
      out.push_back(0.0);
      continue;
    }
    auto choice_tokens = tokenize(parts[1]);
    std::unordered_set<std::string> wanted(choice_tokens.begin(), choice_tokens.end());
    double hits = 0.0;
    for (std::size_t i = 2; i < parts.size(); ++i) {
      for (const auto& tok : tokenize(parts[i])) hits += wanted.count(tok) ? 1.0 : 0.0;
    }
    out.push_back(hits);
  }
  return out;
}

std::vector<double> HttpChoiceScorer::score(std::span<const std::string> inputs) const {
  nlohmann::json request;
  request["inputs"] = std::vector<std::string>(inputs.begin(), inputs.end());
  nlohmann::json response;
  try {
    response = http::post_json(endpoint_, "/score", request);
  } catch (const http::Failure& e) {
    throw ScorerUnavailable(e.what());
  }
  std::vector<double> scores;
  try {
    scores = response.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ScorerUnavailable(std::string("malformed /score response: ") + e.what());
  }
  if (scores.size() != inputs.size()) throw LengthMismatch("eval", inputs.size(), scores.size());
  return scores;
}

std::unique_ptr<ChoiceScorer> make_choice_scorer(std::string_view spec,
                                                 std::string_view separator) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    return std::make_unique<HttpChoiceScorer>(std::string(spec));
  }
  if (spec == "stub:lexical") return std::make_unique<LexicalChoiceScorer>(std::string(separator));
  throw InvalidArgument("eval", "unknown choice scorer '" + std::string(spec) + "'");
}

EvaluationResult evaluate(std::span<const McqaExample> dataset, const PassageSource& passages,
                          const ChoiceScorer& scorer, std::string_view separator) {
  for (const auto& ex : dataset) {
    ex.validate();
    if (!ex.gold) throw MissingGold(ex.id);
  }

  EvaluationResult result;
  result.examples.resize(dataset.size());

  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = dataset.size();

  const auto count = static_cast<std::ptrdiff_t>(dataset.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t e = 0; e < count; ++e) {
    const auto idx = static_cast<std::size_t>(e);
    try {
      const auto& ex = dataset[idx];
      auto& r = result.examples[idx];
      r.id = ex.id;
      r.gold = *ex.gold;
      for (std::size_t c = 0; c < ex.choices.size(); ++c) {
        auto retrieved = passages(ex, c);
        r.passages_used.push_back(std::move(retrieved.ids));
        r.reader_inputs.push_back(assemble_reader_input(ex, c, retrieved.texts, separator));
      }
      r.raw_scores = scorer.score(r.reader_inputs);
      auto pred = predict(ex, r.raw_scores);
      r.predicted = pred.predicted_index;
      r.probabilities = std::move(pred.probabilities);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (idx < first_error_index) {
        first_error_index = idx;
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& r : result.examples) result.correct += r.predicted == r.gold ? 1 : 0;
  result.accuracy = dataset.empty() ? 0.0
                                    : static_cast<double>(result.correct) /
                                          static_cast<double>(dataset.size());
  return result;
}

void write_evaluation(const std::filesystem::path& out_dir, const EvaluationResult& result,
                      std::string_view summary_extra_json) {
  std::filesystem::create_directories(out_dir);
  using ordered_json = nlohmann::ordered_json;

  std::ofstream predictions(out_dir / "predictions.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream inputs(out_dir / "reader_inputs.jsonl", std::ios::binary | std::ios::trunc);
  if (!predictions || !inputs) throw FormatError("eval", "cannot write into " + out_dir.string());
  for (const auto& r : result.examples) {
    ordered_json p;
    p["id"] = r.id;
    p["predicted"] = r.predicted;
    p["gold"] = r.gold;
    p["probabilities"] = r.probabilities;
    p["raw_scores"] = r.raw_scores;
    p["passages_used"] = r.passages_used;
    predictions << p.dump() << '\n';

    ordered_json in;
    in["id"] = r.id;
    in["inputs"] = r.reader_inputs;
    in["label"] = r.gold;
    inputs << in.dump() << '\n';
  }

  ordered_json summary;
  summary["accuracy"] = result.accuracy;
  summary["correct"] = result.correct;
  summary["total"] = result.examples.size();
  if (!summary_extra_json.empty()) {
    auto extra = ordered_json::parse(summary_extra_json);
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
  }
  std::ofstream out(out_dir / "summary.json", std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("eval", "cannot write summary into " + out_dir.string());
  out << summary.dump(2) << '\n';
}

}  // namespace kgr
