#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spe::cli {

// Runs the command line. Returns 0 on success, 1 on a runtime failure
// (for example a diverging fit) and 2 on usage or input errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spe::cli
