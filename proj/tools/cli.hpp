#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradeforge::cli {

enum ExitCode { kOk = 0, kFindings = 1, kError = 2 };

// args excludes the program name. Returns 0 on success, 1 when validation
// findings were reported, 2 on errors (including usage errors).
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gradeforge::cli
