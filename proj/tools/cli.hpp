#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specs::cli {

/// Runs one subcommand. `args` excludes the program name.
/// Returns 0 on success, 1 on data errors and 2 on usage errors; errors are
/// written to `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specs::cli
