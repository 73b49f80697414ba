#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fadq {

struct VerifyOptions {
  std::vector<double> thetas = {0.2, 0.5, 0.8};
  std::int64_t num_blocks = 1'000'000;
  std::uint64_t seed = 20240817;
  int chain_N = 400;
  // Forwarded to SeriesOptions::negate_first_phi_term; with the fault in,
  // the suite must come back failing, which is what proves it has teeth.
  bool inject_phi_sign_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  int failures() const;
};

// Cross-checks every independent route to the same quantities: series vs
// truncated-matrix stationary law, closed-form moments vs both, and the two
// simulator engines vs all of the above.
VerifyReport run_verification(const VerifyOptions& options);

}  // namespace fadq
