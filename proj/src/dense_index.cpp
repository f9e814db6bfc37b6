#include "kgr/dense_index.hpp"

#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "kgr/error.hpp"
#include "kgr/kernels.hpp"

namespace kgr {

namespace {

constexpr std::string_view kVectorMagic = "KGRV";
constexpr std::uint32_t kVectorVersion = 1;
constexpr std::string_view kIndexMagic = "KGRDENSE";
constexpr std::uint32_t kIndexVersion = 1;

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 36;

void check_shape(std::uint64_t count, std::uint64_t dim, const std::string& stage) {
  if (dim == 0) throw FormatError(stage, "vector dimension is zero");
  if (count > std::numeric_limits<PassageId>::max() || count * dim > kMaxElements) {
    throw FormatError(stage, "implausible matrix shape " + std::to_string(count) + "x" +
                                 std::to_string(dim));
  }
}

}  // namespace

void write_vector_file(const std::filesystem::path& path, const VectorMatrix& matrix) {
  if (matrix.values.size() != matrix.count * matrix.dim) {
    throw LengthMismatch("vectors", matrix.count * matrix.dim, matrix.values.size());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("vectors", "cannot write " + path.string());
  io::Writer w(out);
  w.bytes(kVectorMagic);
  w.u32(kVectorVersion);
  w.u64(matrix.count);
  w.u32(static_cast<std::uint32_t>(matrix.dim));
  w.f32_array(matrix.values);
  if (!out) throw FormatError("vectors", "write failed for " + path.string());
}

VectorMatrix read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("vectors", "cannot open " + path.string());
  io::Reader r(in, "vectors");
  if (r.bytes(kVectorMagic.size()) != kVectorMagic) {
    throw FormatError("vectors", path.string() + " is not a vector file");
  }
  if (auto v = r.u32(); v != kVectorVersion) {
    throw FormatError("vectors", "unsupported vector file version " + std::to_string(v));
  }
  VectorMatrix m;
  const auto count = r.u64();
  const auto dim = r.u32();
  check_shape(count, dim, "vectors");
  m.count = static_cast<std::size_t>(count);
  m.dim = dim;
  m.values.resize(m.count * m.dim);
  r.f32_array(m.values);
  r.expect_end();
  return m;
}

DenseIndex DenseIndex::build(const Corpus& corpus, const EmbeddingProvider& provider,
                             std::size_t batch_size) {
  if (corpus.empty()) throw EmptyCorpus("dense");
  if (batch_size == 0) throw InvalidArgument("dense", "batch size must be >= 1");

  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& p : corpus.passages()) texts.push_back(p.text);

  DenseIndex index;
  index.fingerprint_ = provider.fingerprint();
  index.corpus_digest_ = corpus.digest();
  auto& m = index.vectors_;
  m.count = corpus.size();

  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const auto len = std::min(batch_size, texts.size() - start);
    auto batch = provider.embed(std::span<const std::string>(texts).subspan(start, len),
                                EmbeddingRole::passage);
    if (batch.size() != len) throw LengthMismatch("dense", len, batch.size());
    for (std::size_t i = 0; i < len; ++i) {
      if (m.dim == 0) {
        if (batch[i].empty()) throw DimensionMismatch(1, 0);
        m.dim = batch[i].size();
        m.values.resize(m.count * m.dim);
      }
      if (batch[i].size() != m.dim) throw DimensionMismatch(m.dim, batch[i].size());
      std::copy(batch[i].begin(), batch[i].end(),
                m.values.begin() + static_cast<std::ptrdiff_t>((start + i) * m.dim));
    }
  }
  return index;
}

DenseIndex DenseIndex::from_vectors(const Corpus& corpus, VectorMatrix vectors,
                                    std::string fingerprint) {
  if (corpus.empty()) throw EmptyCorpus("dense");
  if (vectors.count != corpus.size()) throw LengthMismatch("dense", corpus.size(), vectors.count);
  if (vectors.dim == 0) throw DimensionMismatch(1, 0);
  if (vectors.values.size() != vectors.count * vectors.dim) {
    throw LengthMismatch("dense", vectors.count * vectors.dim, vectors.values.size());
  }
  DenseIndex index;
  index.vectors_ = std::move(vectors);
  index.fingerprint_ = std::move(fingerprint);
  index.corpus_digest_ = corpus.digest();
  return index;
}

std::vector<double> DenseIndex::score_all(std::span<const float> query) const {
  if (query.size() != dim()) throw DimensionMismatch(dim(), query.size());
  std::vector<double> scores(size());
  kernels::omp::inner_products(vectors_.values, dim(), query, scores);
  return scores;
}

std::vector<double> DenseIndex::score_all_reference(std::span<const float> query) const {
  if (query.size() != dim()) throw DimensionMismatch(dim(), query.size());
  std::vector<double> scores(size());
  kernels::serial::inner_products(vectors_.values, dim(), query, scores);
  return scores;
}

std::vector<ScoredPassage> DenseIndex::search(std::span<const float> query, std::size_t n) const {
  if (n == 0) throw InvalidArgument("dense", "n must be >= 1");
  auto scores = score_all(query);
  return kernels::omp::top_n(scores, n, Provenance::dense);
}

void DenseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("dense", "cannot write " + path.string());
  io::Writer w(out);
  w.bytes(kIndexMagic);
  w.u32(kIndexVersion);
  w.u64(vectors_.count);
  w.u32(static_cast<std::uint32_t>(vectors_.dim));
  w.str(fingerprint_);
  w.str(corpus_digest_);
  w.f32_array(vectors_.values);
  if (!out) throw FormatError("dense", "write failed for " + path.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("dense", "cannot open " + path.string());
  io::Reader r(in, "dense");
  if (r.bytes(kIndexMagic.size()) != kIndexMagic) {
    throw FormatError("dense", path.string() + " is not a dense index");
  }
  if (auto v = r.u32(); v != kIndexVersion) {
    throw FormatError("dense", "unsupported dense index version " + std::to_string(v));
  }
  DenseIndex index;
  const auto count = r.u64();
  const auto dim = r.u32();
  check_shape(count, dim, "dense");
  index.vectors_.count = static_cast<std::size_t>(count);
  index.vectors_.dim = dim;
  index.fingerprint_ = r.str();
  index.corpus_digest_ = r.str();
  index.vectors_.values.resize(index.vectors_.count * dim);
  r.f32_array(index.vectors_.values);
  r.expect_end();
  return index;
}

}  // namespace kgr
