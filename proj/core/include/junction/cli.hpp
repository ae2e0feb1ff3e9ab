#pragma once

namespace junction {

/// Entry point of the junction-asy command line tool.
/// Exit codes: 0 success, 2 validation failure, 3 numeric failure, 64 usage.
int run_cli(int argc, const char* const* argv);

}  // namespace junction
