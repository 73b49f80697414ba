#include "fadq/markov_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fadq/queue_analytic.hpp"
#include "fadq/special.hpp"

namespace fadq {

namespace {

std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                 int n) {
  // Gaussian elimination with partial pivoting on the augmented system.
  const auto idx = [n](int i, int j) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(j);
  };
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a[idx(col, col)]);
    for (int row = col + 1; row < n; ++row) {
      const double v = std::abs(a[idx(row, col)]);
      if (v > best) {
        best = v;
        pivot = row;
      }
    }
    if (best == 0.0) {
      throw std::runtime_error("stationary_solve: singular truncated system");
    }
    if (pivot != col) {
      for (int j = col; j < n; ++j) std::swap(a[idx(col, j)], a[idx(pivot, j)]);
      std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    }
    const double d = a[idx(col, col)];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[idx(row, col)] / d;
      if (f == 0.0) continue;
      a[idx(row, col)] = 0.0;
      for (int j = col + 1; j < n; ++j) a[idx(row, j)] -= f * a[idx(col, j)];
      b[static_cast<std::size_t>(row)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int row = n - 1; row >= 0; --row) {
    double s = b[static_cast<std::size_t>(row)];
    for (int j = row + 1; j < n; ++j) {
      s -= a[idx(row, j)] * x[static_cast<std::size_t>(j)];
    }
    x[static_cast<std::size_t>(row)] = s / a[idx(row, row)];
  }
  return x;
}

double residual_inf(const TruncatedChain& chain, const std::vector<double>& pi) {
  const int n = chain.dimension_N + 1;
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    CompensatedSum s;
    for (int i = 0; i < n; ++i) {
      s.add(pi[static_cast<std::size_t>(i)] * chain.at(i, j));
    }
    worst = std::max(worst, std::abs(s.value() - pi[static_cast<std::size_t>(j)]));
  }
  return worst;
}

}  // namespace

TruncatedChain build_chain(double theta, int N) {
  if (N < 10) {
    throw std::invalid_argument(
        "build_chain: N < 10 cannot hold the queue law, pick N well past the "
        "bulk of the distribution");
  }
  TruncatedChain chain;
  chain.theta = theta;
  chain.dimension_N = N;
  const int n = N + 1;
  chain.transition.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n),
                          0.0);
  auto cell = [&chain, n](int i, int j) -> double& {
    return chain.transition[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                            static_cast<std::size_t>(j)];
  };
  for (int i = 0; i <= N; ++i) {
    // From state i >= 1 the next state is i - 1 + (arrivals completed), so
    // the row carries p_0, p_1, ... starting at column i - 1; state 0 has no
    // departure to subtract and behaves like state 1.
    const int base = std::max(i - 1, 0);
    CompensatedSum row_sum;
    for (int j = base; j < N; ++j) {
      const double p = service_pmf(theta, j - base);
      cell(i, j) = p;
      row_sum.add(p);
    }
    // Tail mass P(T >= N - base) absorbed into the last column keeps the row
    // stochastic; the lower regularized gamma gives it without cancellation.
    cell(i, N) = regularized_gamma_lower(N - base, theta);
    row_sum.add(cell(i, N));
    if (std::abs(row_sum.value() - 1.0) > 1e-12) {
      throw std::runtime_error("build_chain: row mass drifted from 1");
    }
  }
  return chain;
}

std::vector<double> stationary_solve(const TruncatedChain& chain, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("stationary_solve: tol must be > 0");
  }
  const int n = chain.dimension_N + 1;
  std::vector<double> pi;
  if (chain.dimension_N <= 2000) {
    // pi (P - I) = 0 transposes to (P^T - I) pi^T = 0; the last equation is
    // redundant and gets replaced by the normalization sum(pi) = 1.
    std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
          static_cast<std::size_t>(j)] = chain.at(j, i) - (i == j ? 1.0 : 0.0);
      }
    }
    for (int j = 0; j < n; ++j) {
      a[static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n) +
        static_cast<std::size_t>(j)] = 1.0;
    }
    b[static_cast<std::size_t>(n - 1)] = 1.0;
    pi = solve_linear(std::move(a), std::move(b), n);
  } else {
    // Start from the empty queue: the chain only steps down one state per
    // block, so a uniform start would need O(N) iterations just to drain
    // the mass parked near the truncation edge.
    pi.assign(static_cast<std::size_t>(n), 0.0);
    pi[0] = 1.0;
    std::vector<double> next(static_cast<std::size_t>(n));
    bool converged = false;
    for (long iter = 0; iter < 2000000; ++iter) {
      for (int j = 0; j < n; ++j) {
        CompensatedSum s;
        for (int i = 0; i < n; ++i) {
          s.add(pi[static_cast<std::size_t>(i)] * chain.at(i, j));
        }
        next[static_cast<std::size_t>(j)] = s.value();
      }
      double delta = 0.0;
      for (int j = 0; j < n; ++j) {
        delta = std::max(delta, std::abs(next[static_cast<std::size_t>(j)] -
                                         pi[static_cast<std::size_t>(j)]));
      }
      pi.swap(next);
      if (delta < 0.1 * tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw std::runtime_error("stationary_solve: power iteration stalled");
    }
  }

  double total = 0.0;
  for (double& v : pi) {
    v = std::max(v, 0.0);
    total += v;
  }
  for (double& v : pi) v /= total;

  const double res = residual_inf(chain, pi);
  if (res > tol) {
    throw std::runtime_error(
        "stationary_solve: residual above tol, solve did not converge");
  }
  return pi;
}

}  // namespace fadq
