#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "adamil/config.hpp"

namespace adamil::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // experiment error or failed check
inline constexpr int kExitUsage = 2;    // bad flags or configuration

// Commands: convergence, efficiency, backstop-prob, single-path, moments-check.
const std::vector<std::string>& commands();

// Every known key with the defaults of `command`. Throws ConfigError for unknown commands.
Config default_config(std::string_view command);

// args excludes the program name. Writes results under output_dir and the resolved
// configuration to <output_dir>/<command>.config.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adamil::cli
