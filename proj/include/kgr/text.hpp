#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgr {

/// Lowercases ASCII letters and splits on every character that is not an
/// ASCII letter/digit. Bytes >= 0x80 count as word characters so UTF-8
/// encoded letters stay inside their token. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

std::string trim(std::string_view text);

}  // namespace kgr
