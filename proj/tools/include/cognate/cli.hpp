#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cognate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// args excludes the program name. Results go to `out`, usage text and
// errors to `err`; log lines go to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace cognate::cli
