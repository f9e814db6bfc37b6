#include "kgr/corpus.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "kgr/digest.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kCorpusFormatVersion = 1;

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compute_digest(std::span<const Passage> passages) {
  Sha256 h;
  for (const auto& p : passages) {
    h.update(passage_record(p));
    h.update("\n");
  }
  return h.hex_digest();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string entity_field(std::string_view raw, bool normalize_underscores) {
  std::string s(raw);
  if (normalize_underscores) {
    for (auto& c : s) {
      if (c == '_') c = ' ';
    }
  }
  return trim(s);
}

}  // namespace

RelationTemplateTable::RelationTemplateTable(const Rows& rows) {
  for (const auto& [name, phrase] : rows) {
    if (trim(name).empty() || trim(phrase).empty()) {
      throw InvalidArgument("corpus", "relation template rows need a name and a phrase");
    }
    if (!rows_.emplace(name, phrase).second) {
      throw InvalidArgument("corpus", "duplicate relation template '" + name + "'");
    }
  }
}

const RelationTemplateTable& RelationTemplateTable::conceptnet() {
  static const RelationTemplateTable table(Rows{
      {"Antonym", "is the antonym of"},
      {"AtLocation", "is at location of"},
      {"CapableOf", "is capable of"},
      {"Causes", "causes"},
      {"CreatedBy", "is created by"},
      {"IsA", "is a kind of"},
      {"Desires", "desires"},
      {"HasSubevent", "has subevent"},
      {"PartOf", "is part of"},
      {"HasContext", "has context"},
      {"HasProperty", "has property"},
      {"MadeOf", "is made of"},
      {"NotCapableOf", "is not capable of"},
      {"NotDesires", "does not desire"},
      {"ReceivesAction", "is"},
      {"RelatedTo", "is related to"},
      {"UsedFor", "is used for"},
      {"LocatedNear", "is located near"},
      {"CausesDesire", "causes the desire of"},
      {"MotivatedByGoal", "is motivated by the goal of"},
      {"DistinctFrom", "is distinct from"},
      {"HasFirstSubevent", "has the first subevent"},
      {"HasLastSubevent", "has the last subevent"},
      {"HasPrerequisite", "has the prerequisite of"},
      {"Entails", "entails"},
      {"MannerOf", "a manner of"},
      {"InstanceOf", "an instance of"},
      {"DefinedAs", "is defined as"},
      {"HasA", "has a"},
      {"SimilarTo", "is similar to"},
      {"Synonym", "is the synonym of"},
  });
  return table;
}

const std::string* RelationTemplateTable::find(std::string_view relation) const {
  auto it = rows_.find(relation);
  return it == rows_.end() ? nullptr : &it->second;
}

const std::string& RelationTemplateTable::at(std::string_view relation) const {
  if (const auto* phrase = find(relation)) return *phrase;
  throw UnknownRelation(std::string(relation));
}

Corpus::Corpus(std::vector<Passage> passages, CorpusMetadata metadata)
    : passages_(std::move(passages)), metadata_(std::move(metadata)) {
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    if (passages_[i].id != i) {
      throw FormatError("corpus", "passage at position " + std::to_string(i) + " has id " +
                                      std::to_string(passages_[i].id));
    }
  }
  metadata_.count = passages_.size();
  metadata_.corpus_digest = compute_digest(passages_);
}

std::vector<Triplet> parse_triplets(std::istream& in, bool normalize_underscores) {
  std::vector<Triplet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw MalformedLine(line_no, "expected 3 tab-separated fields, found " +
                                       std::to_string(fields.size()));
    }
    Triplet t{entity_field(fields[0], normalize_underscores), trim(fields[1]),
              entity_field(fields[2], normalize_underscores)};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      throw MalformedLine(line_no, "empty field");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string linearize(const Triplet& triplet, const RelationTemplateTable& table) {
  const auto& phrase = table.at(triplet.relation);
  std::string out;
  out.reserve(triplet.head.size() + phrase.size() + triplet.tail.size() + 2);
  out.append(triplet.head).append(" ").append(phrase).append(" ").append(triplet.tail);
  return out;
}

Corpus build_corpus(std::span<const Triplet> triplets, const RelationTemplateTable& table,
                    std::string source_digest) {
  // Sequential pass: dedup, template lookup (so the first unknown relation in
  // input order is the one reported) and id assignment.
  std::unordered_set<std::string> seen;
  std::vector<const Triplet*> kept;
  std::vector<const std::string*> phrases;
  for (const auto& t : triplets) {
    std::string key = t.head + '\t' + t.relation + '\t' + t.tail;
    if (!seen.insert(std::move(key)).second) continue;
    phrases.push_back(&table.at(t.relation));
    kept.push_back(&t);
  }

  std::vector<Passage> passages(kept.size());
  const auto count = static_cast<std::ptrdiff_t>(kept.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const Triplet& t = *kept[i];
    auto& p = passages[i];
    p.id = static_cast<PassageId>(i);
    p.source = t;
    p.text.reserve(t.head.size() + phrases[i]->size() + t.tail.size() + 2);
    p.text.append(t.head).append(" ").append(*phrases[i]).append(" ").append(t.tail);
  }

  CorpusMetadata meta;
  meta.source_digest = std::move(source_digest);
  meta.created = utc_timestamp();
  return Corpus(std::move(passages), std::move(meta));
}

std::string passage_record(const Passage& passage) {
  ordered_json j;
  j["id"] = passage.id;
  j["text"] = passage.text;
  j["head"] = passage.source.head;
  j["relation"] = passage.source.relation;
  j["tail"] = passage.source.tail;
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corpus", "passage " + std::to_string(passage.id) +
                                    " is not valid UTF-8: " + e.what());
  }
}

std::filesystem::path corpus_metadata_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p += ".meta.json";
  return p;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("corpus", "cannot write " + path.string());
    for (const auto& p : corpus.passages()) out << passage_record(p) << '\n';
    if (!out) throw FormatError("corpus", "write failed for " + path.string());
  }
  const auto& m = corpus.metadata();
  ordered_json meta;
  meta["format"] = "kgr-corpus";
  meta["version"] = kCorpusFormatVersion;
  meta["count"] = m.count;
  meta["corpus_digest"] = m.corpus_digest;
  meta["source_digest"] = m.source_digest;
  meta["created"] = m.created;
  std::ofstream out(corpus_metadata_path(path), std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("corpus", "cannot write metadata for " + path.string());
  out << meta.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("corpus", "cannot open " + path.string());

  std::vector<Passage> passages;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Passage p;
      p.id = j.at("id").get<PassageId>();
      p.text = j.at("text").get<std::string>();
      p.source.head = j.at("head").get<std::string>();
      p.source.relation = j.at("relation").get<std::string>();
      p.source.tail = j.at("tail").get<std::string>();
      passages.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  CorpusMetadata meta;
  std::optional<std::string> recorded_digest;
  if (auto meta_path = corpus_metadata_path(path); std::filesystem::exists(meta_path)) {
    std::ifstream min(meta_path);
    try {
      auto j = nlohmann::json::parse(min);
      meta.source_digest = j.value("source_digest", "");
      meta.created = j.value("created", "");
      recorded_digest = j.at("corpus_digest").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus", meta_path.string() + ": " + e.what());
    }
  }

  Corpus corpus(std::move(passages), std::move(meta));
  if (recorded_digest && *recorded_digest != corpus.digest()) {
    throw DigestMismatch(path.string() + " (metadata sidecar)", *recorded_digest, corpus.digest());
  }
  return corpus;
}

}  // namespace kgr
