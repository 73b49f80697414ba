#include "fadq/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fadq {

namespace {

// ln of the Poisson weight x^j e^{-x} / j!
double log_poisson_term(int j, double x) {
  return j * std::log(x) - x - std::lgamma(j + 1.0);
}

void check_gamma_args(int k, double x) {
  if (k < 1) {
    throw std::domain_error("regularized gamma: integer shape k must be >= 1, got " +
                            std::to_string(k));
  }
  if (!(x >= 0.0)) {
    throw std::domain_error("regularized gamma: x must be >= 0");
  }
}

// Q(k,x) by its defining finite sum; full relative precision when Q <= 1/2
// (x >= k), absolute ~ulp otherwise.
double upper_by_finite_sum(int k, double x) {
  CompensatedSum s;
  for (int j = 0; j < k; ++j) {
    s.add(std::exp(log_poisson_term(j, x)));
  }
  return std::min(s.value(), 1.0);
}

// P(k,x) by the Poisson right-tail series; terms decay by x/(j+1) < x/k,
// so this side is used when x < k and P is the small one.
double lower_by_tail_series(int k, double x) {
  double term = std::exp(log_poisson_term(k, x));
  CompensatedSum s;
  for (int j = k; term > 0.0; ++j) {
    s.add(term);
    term *= x / (j + 1.0);
    if (term <= s.value() * 1e-17) {
      // geometric remainder with ratio < x/k < 1
      s.add(term / (1.0 - x / (j + 2.0)));
      break;
    }
  }
  return std::min(s.value(), 1.0);
}

}  // namespace

double regularized_gamma_upper(int k, double x) {
  check_gamma_args(k, x);
  if (x == 0.0) return 1.0;
  if (x < k) return 1.0 - lower_by_tail_series(k, x);
  return upper_by_finite_sum(k, x);
}

double regularized_gamma_lower(int k, double x) {
  check_gamma_args(k, x);
  if (x == 0.0) return 0.0;
  if (x < k) return lower_by_tail_series(k, x);
  return 1.0 - upper_by_finite_sum(k, x);
}

double lambert_w_minus1_conjugate(double theta) {
  if (theta == 1.0) {
    throw std::domain_error(
        "lambert_w_minus1_conjugate: theta = 1 is the branch point; z* = 1 "
        "and the geometric tail degenerates");
  }
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::domain_error("lambert_w_minus1_conjugate: theta must lie in (0,1)");
  }
  // g(x) = ln x - x - (ln theta - theta) is positive at x = 1+, strictly
  // decreasing on (1, inf); bisect to machine width.
  const double target = std::log(theta) - theta;
  const auto g = [target](double x) { return std::log(x) - x - target; };
  double lo = 1.0;
  double hi = 2.0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) {
      throw std::runtime_error("lambert_w_minus1_conjugate: bracketing failed");
    }
  }
  while (hi - lo > 1e-16 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval is one ulp wide
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Newton polish on the bisection result; kept only while it improves the
  // residual (near theta = 1 the root almost merges with x = 1 and plain
  // Newton degrades to linear).
  double x = 0.5 * (lo + hi);
  double best = x;
  double best_res = std::abs(g(x));
  for (int i = 0; i < 3 && best_res > 0.0; ++i) {
    const double d = 1.0 / x - 1.0;
    if (d == 0.0) break;
    x -= g(x) / d;
    if (!(x > 1.0) || !std::isfinite(x)) break;
    const double res = std::abs(g(x));
    if (res >= best_res) break;
    best = x;
    best_res = res;
  }
  return best / theta;
}

namespace {

struct QuadContext {
  const std::function<double(double)>& f;
  std::int64_t budget;
  std::int64_t evals = 0;

  double eval(double x) {
    if (evals >= budget) {
      throw std::runtime_error(
          "integrate_adaptive: evaluation budget exhausted before convergence");
    }
    ++evals;
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw std::runtime_error("integrate_adaptive: integrand not finite at x = " +
                               std::to_string(x));
    }
    return v;
  }
};

// One bisection step of adaptive Simpson; accepted panels contribute the
// Richardson-corrected value and their residual estimate.
void refine_panel(QuadContext& ctx, double a, double b, double fa, double fm,
                  double fb, double whole, double tol, int depth,
                  CompensatedSum& value, CompensatedSum& err) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = ctx.eval(lm);
  const double frm = ctx.eval(rm);
  const double h12 = (b - a) / 12.0;
  const double left = h12 * (fa + 4.0 * flm + fm);
  const double right = h12 * (fm + 4.0 * frm + fb);
  const double residual = (left + right - whole) / 15.0;
  if (std::abs(residual) <= tol) {
    value.add(left + right + residual);
    err.add(std::abs(residual));
    return;
  }
  if (depth <= 0) {
    throw std::runtime_error(
        "integrate_adaptive: max refinement depth reached without convergence");
  }
  refine_panel(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, value, err);
  refine_panel(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, value, err);
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b,
                                    const QuadratureOptions& options) {
  if (!(options.rel_tol > 0.0)) {
    throw std::invalid_argument("integrate_adaptive: rel_tol must be positive");
  }
  if (!(a < b)) {
    throw std::invalid_argument("integrate_adaptive: require a < b");
  }
  QuadContext ctx{f, options.max_evaluations};
  const double fa = ctx.eval(a);
  const double fb = ctx.eval(b);
  const double fm = ctx.eval(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Absolute budget from the crude estimate, floored so near-zero integrals
  // still terminate; halved down the recursion so panel residuals sum to it.
  const double tol = std::max(options.rel_tol * std::abs(whole), 1e-13);
  CompensatedSum value;
  CompensatedSum err;
  refine_panel(ctx, a, b, fa, fm, fb, whole, tol, options.max_depth, value, err);
  return {value.value(), err.value(), ctx.evals};
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double rel_tol) {
  QuadratureOptions options;
  options.rel_tol = rel_tol;
  return integrate_adaptive(f, a, b, options);
}

}  // namespace fadq
