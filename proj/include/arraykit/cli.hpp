#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arraykit {

/// Command-line entry point. `args` excludes the program name. Returns 0 on
/// success, 1 on a usage error and 2 on a data error.
int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace arraykit
