#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synthir::cli {

// Executes one subcommand. Exit codes: 0 success, 1 usage error, 2 runtime
// error. Diagnostics go to `err`; data goes to files or `out`.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err);

}  // namespace synthir::cli
