#pragma once

namespace stkd {

/// Full command-line entry point. Exit codes: 0 success, 1 usage,
/// 2 config error, 3 runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace stkd
