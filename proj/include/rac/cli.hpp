// Command-line front end: gen, run, sweep and report.

#ifndef RAC_CLI_HPP
#define RAC_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace rac {

inline constexpr const char* kToolVersion = "0.1.0";

/// args excludes the program name. Returns 0 on success, 1 on a usage error
/// (help text goes to err), 2 on a runtime failure.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a flat key=value file into "--key=value" tokens; underscores in keys
/// become dashes. Throws std::runtime_error if the file cannot be read.
std::vector<std::string> config_file_args(const std::string& path);

}  // namespace rac

#endif  // RAC_CLI_HPP
