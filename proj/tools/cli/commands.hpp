#pragma once

#include <string>
#include <vector>

namespace xmkt::cli {

/// Parses argv, runs one subcommand and returns the process exit status.
/// Failures print a JSON error object on stderr:
/// 2 ConfigError, 3 DataError, 4 PlanError, 1 anything else.
int run(int argc, char** argv);

/// Convenience for tests: argv without the program name.
int run(const std::vector<std::string>& args);

}  // namespace xmkt::cli
