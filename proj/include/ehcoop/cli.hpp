#pragma once

#include <iosfwd>

namespace ehcoop::cli {

// Entry point of the `ehcoop` tool. Results go to `out`, diagnostics to
// `err`. Returns 0 on success, including solves that did not converge.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ehcoop::cli
