#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgr/types.hpp"

namespace kgr {

struct Triplet {
  std::string head;
  std::string relation;
  std::string tail;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Relation name -> natural-language phrase used when linearizing triplets.
class RelationTemplateTable {
 public:
  using Rows = std::vector<std::pair<std::string, std::string>>;

  /// Throws InvalidArgument on duplicate keys or empty names/phrases.
  explicit RelationTemplateTable(const Rows& rows);

  /// The 31-relation ConceptNet mapping.
  static const RelationTemplateTable& conceptnet();

  /// nullptr when the relation has no template.
  const std::string* find(std::string_view relation) const;
  /// Throws UnknownRelation.
  const std::string& at(std::string_view relation) const;

  std::size_t size() const noexcept { return rows_.size(); }
  auto begin() const noexcept { return rows_.begin(); }
  auto end() const noexcept { return rows_.end(); }

 private:
  std::map<std::string, std::string, std::less<>> rows_;
};

struct Passage {
  PassageId id = 0;
  std::string text;
  Triplet source;

  friend bool operator==(const Passage&, const Passage&) = default;
};

struct CorpusMetadata {
  std::string source_digest;  // SHA-256 of the input TSV, empty when built in memory
  std::string corpus_digest;  // SHA-256 of the serialized passage records
  std::size_t count = 0;
  std::string created;        // ISO-8601 UTC; the only non-deterministic field
};

/// Immutable, id-ordered passage collection.
class Corpus {
 public:
  Corpus() = default;
  /// Validates that passage ids equal their positions and recomputes the
  /// content digest; metadata.count and metadata.corpus_digest are overwritten.
  Corpus(std::vector<Passage> passages, CorpusMetadata metadata);

  std::span<const Passage> passages() const noexcept { return passages_; }
  const Passage& operator[](PassageId id) const { return passages_.at(id); }
  std::size_t size() const noexcept { return passages_.size(); }
  bool empty() const noexcept { return passages_.empty(); }

  const CorpusMetadata& metadata() const noexcept { return metadata_; }
  const std::string& digest() const noexcept { return metadata_.corpus_digest; }

 private:
  std::vector<Passage> passages_;
  CorpusMetadata metadata_;
};

/// Reads tab-separated head/relation/tail lines. Blank lines and lines whose
/// first character is '#' are skipped; fields are whitespace-trimmed.
/// Throws MalformedLine (1-based line number) on the first bad line.
std::vector<Triplet> parse_triplets(std::istream& in, bool normalize_underscores = false);

/// "<head> <phrase> <tail>". Throws UnknownRelation.
std::string linearize(const Triplet& triplet, const RelationTemplateTable& table);

/// Drops exact-duplicate triplets (first occurrence wins), linearizes the
/// rest and numbers them 0..count-1 in input order.
Corpus build_corpus(std::span<const Triplet> triplets, const RelationTemplateTable& table,
                    std::string source_digest = {});

/// One corpus line: {"id","text","head","relation","tail"} as compact JSON.
std::string passage_record(const Passage& passage);

/// Sidecar path holding the metadata record for a corpus file.
std::filesystem::path corpus_metadata_path(const std::filesystem::path& corpus_path);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
/// Throws FormatError on unreadable records, non-dense ids, or a sidecar
/// whose digest disagrees with the file contents.
Corpus read_corpus(const std::filesystem::path& path);

}  // namespace kgr
