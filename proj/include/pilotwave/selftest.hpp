#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pw::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;   // measured numbers and the pinned tolerances
  double seconds = 0.0;
};

// Runs the ten built-in acceptance checks in order, writing scratch artifacts
// under scratch_dir and one log line per check. Never throws for a failed
// check; failures come back with passed = false and the measured numbers.
std::vector<CheckResult> run_all(const std::string& scratch_dir, int threads,
                                 std::ostream& log);

}  // namespace pw::selftest
