#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fopid::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidInput = 2,
    kNumericalFailure = 3,
};

// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "FOPID_OUTPUT_DIR";

// args excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// key=value lines ('#' comments, blank lines ignored) expanded to "--key=value".
// Throws std::runtime_error for unreadable files or malformed lines.
std::vector<std::string> config_arguments(const std::string& path);

} // namespace fopid::cli
