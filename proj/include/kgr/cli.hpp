#pragma once

#include <iosfwd>

namespace kgr::cli {

/// Exit status: 0 success, 1 usage error (usage on `err`), 2 data/runtime
/// error (message naming the failing stage on `err`).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgr::cli
