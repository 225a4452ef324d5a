#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msd {

// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 training divergence.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msd
