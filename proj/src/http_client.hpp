#pragma once

// Minimal JSON-over-HTTP client for the model service routes.

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace kgr::http {

/// Transport failure or non-200 status. Callers rethrow it as the
/// stage-specific "unavailable" error.
class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// endpoint is "http://host:port" with an optional base path.
nlohmann::json post_json(std::string_view endpoint, std::string_view route,
                         const nlohmann::json& body);
nlohmann::json get_json(std::string_view endpoint, std::string_view route);

}  // namespace kgr::http
