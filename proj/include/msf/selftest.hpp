#pragma once

#include <ostream>

namespace msf {

/// Fast invariant checks over every module; prints one line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream& out);

}  // namespace msf
