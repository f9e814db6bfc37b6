#include "kgr/embedding.hpp"

#include <fstream>

#include <json.hpp>

#include "http_client.hpp"
#include "kgr/digest.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(EmbeddingRole role) noexcept {
  return role == EmbeddingRole::query ? "query" : "passage";
}

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("embedding", "hashing dimension must be > 0");
}

std::vector<Embedding> HashingEmbeddingProvider::embed(std::span<const std::string> texts,
                                                       EmbeddingRole) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Embedding v(dim_, 0.0f);
    for (const auto& tok : tokenize(text)) v[fnv1a(tok) % dim_] += 1.0f;
    out.push_back(std::move(v));
  }
  return out;
}

std::string HashingEmbeddingProvider::fingerprint() const {
  return "stub:hashing:" + std::to_string(dim_);
}

PrecomputedEmbeddingProvider::PrecomputedEmbeddingProvider(std::string fingerprint, std::size_t dim)
    : fingerprint_(std::move(fingerprint)), dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("embedding", "embedding dimension must be > 0");
}

void PrecomputedEmbeddingProvider::add(EmbeddingRole role, std::string text, Embedding vector) {
  if (vector.size() != dim_) throw DimensionMismatch(dim_, vector.size());
  auto& table = role == EmbeddingRole::query ? queries_ : passages_;
  table.insert_or_assign(std::move(text), std::move(vector));
}

PrecomputedEmbeddingProvider PrecomputedEmbeddingProvider::load_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProviderUnavailable("cannot open embedding table " + path.string());

  std::optional<PrecomputedEmbeddingProvider> provider;
  std::string line;
  std::size_t line_no = 0;
  const auto fp = "precomputed:" + file_sha256(path).substr(0, 16);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto role_name = j.at("role").get<std::string>();
      EmbeddingRole role;
      if (role_name == "query") {
        role = EmbeddingRole::query;
      } else if (role_name == "passage") {
        role = EmbeddingRole::passage;
      } else {
        throw FormatError("embedding", path.string() + ":" + std::to_string(line_no) +
                                           ": role must be query or passage");
      }
      auto vec = j.at("vector").get<Embedding>();
      if (!provider) provider.emplace(fp, vec.size());
      provider->add(role, j.at("text").get<std::string>(), std::move(vec));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("embedding", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!provider) throw FormatError("embedding", path.string() + " holds no vectors");
  return std::move(*provider);
}

std::vector<Embedding> PrecomputedEmbeddingProvider::embed(std::span<const std::string> texts,
                                                           EmbeddingRole role) const {
  const auto& table = role == EmbeddingRole::query ? queries_ : passages_;
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto it = table.find(text);
    if (it == table.end()) {
      throw ProviderUnavailable("no precomputed " + std::string(to_string(role)) +
                                " vector for \"" + text + "\"");
    }
    out.push_back(it->second);
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::size_t max_batch)
    : endpoint_(std::move(endpoint)), max_batch_(max_batch) {
  if (max_batch_ == 0) throw InvalidArgument("embedding", "max_batch must be > 0");
}

std::vector<Embedding> HttpEmbeddingProvider::embed(std::span<const std::string> texts,
                                                    EmbeddingRole role) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < texts.size(); start += max_batch_) {
    auto chunk = texts.subspan(start, std::min(max_batch_, texts.size() - start));
    nlohmann::json request;
    request["texts"] = std::vector<std::string>(chunk.begin(), chunk.end());
    request["role"] = to_string(role);
    nlohmann::json response;
    try {
      response = http::post_json(endpoint_, "/embed", request);
    } catch (const http::Failure& e) {
      throw ProviderUnavailable(e.what());
    }
    try {
      const auto reported = response.at("dim").get<std::size_t>();
      auto vectors = response.at("vectors").get<std::vector<Embedding>>();
      if (vectors.size() != chunk.size()) {
        throw LengthMismatch("embedding", chunk.size(), vectors.size());
      }
      if (!dim) dim = reported;
      if (reported != *dim) throw DimensionMismatch(*dim, reported);
      for (auto& v : vectors) {
        if (v.size() != *dim) throw DimensionMismatch(*dim, v.size());
        out.push_back(std::move(v));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderUnavailable(std::string("malformed /embed response: ") + e.what());
    }
  }
  return out;
}

std::string HttpEmbeddingProvider::fingerprint() const {
  try {
    auto info = http::get_json(endpoint_, "/info");
    if (info.is_object()) return "http:" + info.dump();
  } catch (const http::Failure&) {
  }
  return "http:" + endpoint_;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    return std::make_unique<HttpEmbeddingProvider>(std::string(spec));
  }
  if (spec == "stub:hashing") return std::make_unique<HashingEmbeddingProvider>();
  if (spec.starts_with("stub:hashing:")) {
    const auto dim_text = std::string(spec.substr(13));
    std::size_t pos = 0;
    unsigned long dim = 0;
    try {
      dim = std::stoul(dim_text, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != dim_text.size() || dim == 0) {
      throw InvalidArgument("embedding", "bad hashing dimension in '" + std::string(spec) + "'");
    }
    return std::make_unique<HashingEmbeddingProvider>(dim);
  }
  if (spec.starts_with("stub:")) {
    throw InvalidArgument("embedding", "unknown stub provider '" + std::string(spec) + "'");
  }
  return std::make_unique<PrecomputedEmbeddingProvider>(
      PrecomputedEmbeddingProvider::load_jsonl(std::string(spec)));
}

}  // namespace kgr
