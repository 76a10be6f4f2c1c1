#ifndef CYLQG_ACCEPTANCE_HPP
#define CYLQG_ACCEPTANCE_HPP

#include <iosfwd>

namespace cylqg {

struct AcceptanceOptions {
  int threads = 0;
  bool verbose = false; // extra measurement lines under each criterion
};

// Runs the full verification suite: one PASS/FAIL line per criterion on
// os, returns the number of failed criteria. Tolerances live in the
// implementation, next to the measurements they gate.
int run_acceptance(std::ostream& os, const AcceptanceOptions& opt = {});

} // namespace cylqg

#endif
