#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <json.hpp>

#include "fake_service.hpp"
#include "kgr/embedding.hpp"
#include "kgr/error.hpp"
#include "test_util.hpp"

namespace kgr {
namespace {

using nlohmann::json;

TEST(HashingProvider, DeterministicFixedDimension) {
  HashingEmbeddingProvider p(32);
  std::vector<std::string> texts{"hair brush", "Hair, brush!", "", "dog"};
  auto a = p.embed(texts, EmbeddingRole::passage);
  auto b = p.embed(texts, EmbeddingRole::query);
  ASSERT_EQ(a.size(), 4u);
  for (const auto& v : a) EXPECT_EQ(v.size(), 32u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[0], a[1]);  // same tokens after normalization
  EXPECT_EQ(std::accumulate(a[0].begin(), a[0].end(), 0.0f), 2.0f);
  EXPECT_EQ(std::accumulate(a[2].begin(), a[2].end(), 0.0f), 0.0f);
  EXPECT_EQ(p.fingerprint(), "stub:hashing:32");
}

TEST(ProviderFactory, ParsesSpecs) {
  EXPECT_EQ(make_embedding_provider("stub:hashing")->fingerprint(), "stub:hashing:64");
  EXPECT_EQ(make_embedding_provider("stub:hashing:8")->fingerprint(), "stub:hashing:8");
  EXPECT_THROW(make_embedding_provider("stub:hashing:0"), InvalidArgument);
  EXPECT_THROW(make_embedding_provider("stub:hashing:x"), InvalidArgument);
  EXPECT_THROW(make_embedding_provider("stub:nope"), InvalidArgument);
  EXPECT_THROW(make_embedding_provider("/does/not/exist.jsonl"), ProviderUnavailable);
}

TEST(PrecomputedProvider, LoadsJsonlByRole) {
  testing::TempDir dir;
  testing::write_file(dir / "e.jsonl",
                      R"({"text":"q1","role":"query","vector":[1,0]})" "\n"
                      R"({"text":"q1","role":"passage","vector":[0,1]})" "\n"
                      "\n"
                      R"({"text":"p","role":"passage","vector":[0.5,0.5]})" "\n");
  auto p = make_embedding_provider((dir / "e.jsonl").string());
  std::vector<std::string> q{"q1"};
  EXPECT_EQ(p->embed(q, EmbeddingRole::query)[0], (Embedding{1, 0}));
  EXPECT_EQ(p->embed(q, EmbeddingRole::passage)[0], (Embedding{0, 1}));
  std::vector<std::string> missing{"nope"};
  EXPECT_THROW(p->embed(missing, EmbeddingRole::query), ProviderUnavailable);
  EXPECT_TRUE(p->fingerprint().starts_with("precomputed:"));
}

TEST(PrecomputedProvider, RejectsBadTables) {
  testing::TempDir dir;
  testing::write_file(dir / "dims.jsonl",
                      R"({"text":"a","role":"query","vector":[1,0]})" "\n"
                      R"({"text":"b","role":"query","vector":[1]})" "\n");
  EXPECT_THROW(PrecomputedEmbeddingProvider::load_jsonl(dir / "dims.jsonl"), DimensionMismatch);
  testing::write_file(dir / "role.jsonl", R"({"text":"a","role":"doc","vector":[1]})" "\n");
  EXPECT_THROW(PrecomputedEmbeddingProvider::load_jsonl(dir / "role.jsonl"), FormatError);
  testing::write_file(dir / "empty.jsonl", "");
  EXPECT_THROW(PrecomputedEmbeddingProvider::load_jsonl(dir / "empty.jsonl"), FormatError);
}

TEST(HttpProvider, SpeaksEmbedProtocolAndChunks) {
  testing::FakeService svc;
  std::atomic<int> requests{0};
  svc.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    auto body = json::parse(req.body);
    const bool is_query = body.at("role") == "query";
    json vectors = json::array();
    for (const auto& t : body.at("texts")) {
      const auto s = t.get<std::string>();
      vectors.push_back({static_cast<double>(s.size()), is_query ? 1.0 : -1.0, 0.25});
    }
    res.set_content(json{{"dim", 3}, {"vectors", vectors}}.dump(), "application/json");
  });
  svc.server().Get("/info", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"model":"fake-dpr"})", "application/json");
  });
  svc.start();

  HttpEmbeddingProvider p(svc.endpoint(), 2);
  std::vector<std::string> texts{"a", "bb", "ccc", "dddd", "eeeee"};
  auto out = p.embed(texts, EmbeddingRole::passage);
  EXPECT_EQ(requests.load(), 3);
  ASSERT_EQ(out.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(out[i], (Embedding{static_cast<float>(i + 1), -1.0f, 0.25f}));
  }
  EXPECT_EQ(p.embed(std::span(texts).first(1), EmbeddingRole::query)[0][1], 1.0f);
  EXPECT_TRUE(p.embed({}, EmbeddingRole::query).empty());
  EXPECT_EQ(p.fingerprint(), R"(http:{"model":"fake-dpr"})");
}

TEST(HttpProvider, ServiceErrorsSurfaceAsUnavailable) {
  testing::FakeService svc;
  svc.server().Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("loading", "text/plain");
  });
  svc.start();
  HttpEmbeddingProvider p(svc.endpoint());
  std::vector<std::string> texts{"x"};
  EXPECT_THROW(p.embed(texts, EmbeddingRole::query), ProviderUnavailable);
  EXPECT_EQ(p.fingerprint(), "http:" + svc.endpoint());
}

TEST(HttpProvider, UnreachableEndpoint) {
  std::string endpoint;
  {
    testing::FakeService svc;
    svc.start();
    endpoint = svc.endpoint();
  }
  HttpEmbeddingProvider p(endpoint);
  std::vector<std::string> texts{"x"};
  EXPECT_THROW(p.embed(texts, EmbeddingRole::query), ProviderUnavailable);
}

TEST(HttpProvider, ShapeViolations) {
  testing::FakeService svc;
  svc.server().Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto n = json::parse(req.body).at("texts").size();
    if (n == 1) {
      res.set_content(R"({"dim":2,"vectors":[[1,2],[3,4]]})", "application/json");
    } else {
      res.set_content(R"({"dim":2,"vectors":[[1,2],[3]]})", "application/json");
    }
  });
  svc.start();
  HttpEmbeddingProvider p(svc.endpoint());
  std::vector<std::string> one{"x"}, two{"x", "y"};
  EXPECT_THROW(p.embed(one, EmbeddingRole::query), LengthMismatch);
  EXPECT_THROW(p.embed(two, EmbeddingRole::query), DimensionMismatch);
}

}  // namespace
}  // namespace kgr
