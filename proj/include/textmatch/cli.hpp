#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace textmatch {

/// Command-line front end with subcommands train, eval, keywords, and
/// gradcheck. `args` excludes the program name. Returns 0 on success, 1 on
/// usage errors or internal failures, 2 on data/config errors.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace textmatch
