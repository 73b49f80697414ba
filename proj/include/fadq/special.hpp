#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace fadq {

// Neumaier-compensated accumulator. Series targets around 1e-12 die by a
// thousand rounding cuts with naive summation; this keeps the running error
// at one ulp of the final value.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Regularized incomplete gamma pair for integer shape k >= 1.
// Q(k,x) is the Poisson left tail sum_{j<k} x^j e^{-x}/j!, P(k,x) the right
// tail; each is evaluated by the series that keeps full relative precision
// on its small side, so P + Q = 1 holds to within a few ulp.
double regularized_gamma_upper(int k, double x);
double regularized_gamma_lower(int k, double x);

// Root z* > 1 of z e^{theta(1 - z)} = 1 for theta in (0,1), i.e. the
// conjugate point x*/theta where x* > 1 solves x e^{-x} = theta e^{-theta}.
// Residual guarantee: |z* e^{theta(1-z*)} - 1| <= 1e-12.
double lambert_w_minus1_conjugate(double theta);

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;  // sum of accepted panel residuals
  std::int64_t evaluations = 0;
};

struct QuadratureOptions {
  double rel_tol = 1e-10;
  std::int64_t max_evaluations = 1000000;
  int max_depth = 52;
};

// Adaptive Simpson with interval bisection and Richardson end correction.
// The integrand is evaluated at the endpoints: callers must supply limit
// values for removable singularities (e.g. return 0 at x = 0 for
// integrands in e^{-theta/x}). Non-convergence within the evaluation
// budget or depth raises; a silent wrong value is never returned.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b,
                                    const QuadratureOptions& options);
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double rel_tol = 1e-10);

}  // namespace fadq
