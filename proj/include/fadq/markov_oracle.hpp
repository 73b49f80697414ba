#pragma once

#include <vector>

namespace fadq {

// Truncated one-step transition matrix of the queue chain on states 0..N.
// Row 0 and row 1 coincide (an empty or single-packet queue both leave one
// departure's worth of room); probability past state N is absorbed into the
// last column so every row still sums to 1.
struct TruncatedChain {
  double theta = 0.0;
  int dimension_N = 0;
  std::vector<double> transition;  // (N+1) x (N+1), row-major

  double at(int i, int j) const {
    return transition[static_cast<std::size_t>(i) *
                          static_cast<std::size_t>(dimension_N + 1) +
                      static_cast<std::size_t>(j)];
  }
};

TruncatedChain build_chain(double theta, int N);

// Stationary row vector of the truncated chain, normalized to sum 1.
// Solved directly via Gaussian elimination up to N = 2000, by power
// iteration beyond; either way the result is rejected unless the residual
// max_i |(pi P - pi)_i| comes out below tol.
std::vector<double> stationary_solve(const TruncatedChain& chain, double tol);

}  // namespace fadq
