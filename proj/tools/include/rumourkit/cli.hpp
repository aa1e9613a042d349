#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rumourkit::cli {

/// Runs one pipeline stage. `args` excludes the program name.
/// Returns 0 on success or --help, 1 on runtime failure, 2 on usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rumourkit::cli
