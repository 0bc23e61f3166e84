#pragma once

#include <ostream>

namespace diffinv::cli {

/// Exit codes: 0 success, 1 invalid input, 2 failed mathematical check,
/// 64 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffinv::cli
