#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hypekit::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypekit::cli
