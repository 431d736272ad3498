#pragma once

#include <ostream>

namespace tbmimo {

// Fast built-in invariant suite (no Monte Carlo, no cone solves).  Prints one
// line per check and returns the number of failures.
int run_verification(std::ostream& os);

}  // namespace tbmimo
