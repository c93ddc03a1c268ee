#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crisisspot {

/// Runs the command line `args` (without the program name). Results go to
/// `out`; failures print one line "error category=<name>: <message>" to `err`
/// and return 2 (usage), 3 (data) or 4 (numeric).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crisisspot
