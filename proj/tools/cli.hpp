#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zkline::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kModuleError = 1;
inline constexpr int kConfigError = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace zkline::cli
