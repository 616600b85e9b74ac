#pragma once

#include <string>
#include <vector>

namespace splmll::cli {

// Exit status taxonomy shared by every subcommand.
enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kArgument = 2,
    kParse = 3,
    kSchema = 4,
    kValidation = 5,
    kNumeric = 6,
    kDivergence = 7,
    kIo = 8,
    kUndefinedMetric = 9,
};

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

// Writes to a sibling temporary file, then renames over path.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace splmll::cli
