#pragma once

#include <ostream>

namespace biascope::cli {

// Exit status: 0 success, 1 validation/runtime failure, 2 usage error.
// Failures print one line "error: <kind>: <message>" to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace biascope::cli
