#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace svfar {

/// Parses the arguments after the program name and runs one subcommand.
/// Returns 0 on success, 1 on usage errors, 2 on data errors and 3 on numerical failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace svfar
