#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mapss {

// Entry point of the `mapss` command. args[0] is the program name.
// Exit codes: 0 success, 1 validation failure or usage error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace mapss
