#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace poet::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,      // bad flags, config or input files
    kNumericError = 3,    // singular or otherwise unusable numerics
    kInternalError = 4,
};

/// Runs one command line (without the program name). Normal output goes to
/// `out`; failures are reported on `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory used when no output directory is given: $POET_OUTPUT_DIR, else
/// "poet_out".
std::string default_output_dir();

}  // namespace poet::cli
