#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adm3::cli {

inline constexpr int kOk = 0;
inline constexpr int kVerificationFailed = 1;
inline constexpr int kUsage = 2;

// args excludes the program name. The human report goes to out, the JSON
// report to the --json path when given; diagnostics go to err.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adm3::cli
