#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgr {

/// Base class for every data/runtime failure raised by the library. The
/// stage names the pipeline step that failed (e.g. "corpus", "sparse").
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail)
      : Error("corpus", "malformed line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownRelation : public Error {
 public:
  explicit UnknownRelation(std::string name)
      : Error("corpus", "unknown relation '" + name + "'"), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(std::string stage) : Error(std::move(stage), "corpus is empty") {}
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dense", "dimension mismatch: expected " + std::to_string(expected) + ", got " +
                           std::to_string(actual)) {}
};

class ProviderUnavailable : public Error {
 public:
  explicit ProviderUnavailable(const std::string& detail)
      : Error("embedding", "embedding provider unavailable: " + detail) {}
};

class ScorerUnavailable : public Error {
 public:
  explicit ScorerUnavailable(const std::string& detail)
      : Error("scorer", "scorer unavailable: " + detail) {}
};

class ScoreOutOfRange : public Error {
 public:
  ScoreOutOfRange(std::size_t passage_id, double score)
      : Error("rerank", "reranker score " + std::to_string(score) + " for passage " +
                            std::to_string(passage_id) + " is outside [0,1]"),
        passage_id_(passage_id) {}

  std::size_t passage_id() const noexcept { return passage_id_; }

 private:
  std::size_t passage_id_;
};

class EmptyList : public Error {
 public:
  explicit EmptyList(const std::string& which)
      : Error("fusion", "cannot fuse: " + which + " list is empty") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::string stage, std::size_t expected, std::size_t actual)
      : Error(std::move(stage), "length mismatch: expected " + std::to_string(expected) +
                                    ", got " + std::to_string(actual)) {}
};

class MissingGold : public Error {
 public:
  explicit MissingGold(std::string example_id)
      : Error("eval", "example '" + example_id + "' has no gold answer"),
        example_id_(std::move(example_id)) {}

  const std::string& example_id() const noexcept { return example_id_; }

 private:
  std::string example_id_;
};

/// Unreadable or inconsistent on-disk artifact (bad magic, version, truncation).
class FormatError : public Error {
 public:
  FormatError(std::string stage, const std::string& message) : Error(std::move(stage), message) {}
};

class DigestMismatch : public Error {
 public:
  DigestMismatch(const std::string& what, const std::string& expected, const std::string& actual)
      : Error("validate", "corpus digest mismatch for " + what + ": expected " + expected +
                              ", found " + actual) {}
};

class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string stage, const std::string& message)
      : Error(std::move(stage), message) {}
};

}  // namespace kgr
