#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chkpt {

// Full command-line driver. args excludes the program name.
// Exit codes: 0 success (and simulation agreement), 1 usage or numeric
// failure, 2 infeasible instance, 3 simulation disagrees with the analytic
// expectations.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chkpt
