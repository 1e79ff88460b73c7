#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace semrel::cli {

// Runs one subcommand. Returns 0 on success, 1 when a module reports an
// error (diagnostic JSON on `err`), 2 on a usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semrel::cli
