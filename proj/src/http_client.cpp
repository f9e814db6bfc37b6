#include "http_client.hpp"

#include <httplib.h>

namespace kgr::http {

namespace {

constexpr time_t kConnectTimeoutSec = 5;
constexpr time_t kReadTimeoutSec = 300;

struct Target {
  std::string origin;
  std::string base;
};

Target split_endpoint(std::string_view endpoint) {
  auto scheme = endpoint.find("://");
  if (scheme == std::string_view::npos) throw Failure("endpoint must start with http://");
  auto slash = endpoint.find('/', scheme + 3);
  Target t;
  t.origin = std::string(endpoint.substr(0, slash));
  if (slash != std::string_view::npos) t.base = std::string(endpoint.substr(slash));
  while (!t.base.empty() && t.base.back() == '/') t.base.pop_back();
  return t;
}

httplib::Client make_client(const Target& t) {
  httplib::Client client(t.origin);
  client.set_connection_timeout(kConnectTimeoutSec, 0);
  client.set_read_timeout(kReadTimeoutSec, 0);
  return client;
}

nlohmann::json decode(const httplib::Result& res, const std::string& url) {
  if (!res) throw Failure(url + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Failure(url + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Failure(url + ": invalid JSON response: " + e.what());
  }
}

}  // namespace

nlohmann::json post_json(std::string_view endpoint, std::string_view route,
                         const nlohmann::json& body) {
  auto target = split_endpoint(endpoint);
  auto client = make_client(target);
  auto path = target.base + std::string(route);
  return decode(client.Post(path, body.dump(), "application/json"), target.origin + path);
}

nlohmann::json get_json(std::string_view endpoint, std::string_view route) {
  auto target = split_endpoint(endpoint);
  auto client = make_client(target);
  auto path = target.base + std::string(route);
  return decode(client.Get(path), target.origin + path);
}

}  // namespace kgr::http
