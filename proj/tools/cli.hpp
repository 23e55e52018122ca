#pragma once

#include <ostream>

namespace covbias::cli {

// Runs one invocation. Returns 0 on success, 1 on usage errors and 2 on
// data errors; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covbias::cli
