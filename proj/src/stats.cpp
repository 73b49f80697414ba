#include "fadq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fadq/special.hpp"

namespace fadq {

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = std::max(p.size(), q.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = i < p.size() ? p[i] : 0.0;
    const double qi = i < q.size() ? q[i] : 0.0;
    s.add(std::abs(pi - qi));
  }
  return 0.5 * s.value();
}

double chi_square_survival(double stat, int dof) {
  if (dof < 1) {
    throw std::domain_error("chi_square_survival: require dof >= 1");
  }
  if (!(stat >= 0.0)) {
    throw std::domain_error("chi_square_survival: require stat >= 0");
  }
  const double y = 0.5 * stat;
  if (dof % 2 == 0) {
    return regularized_gamma_upper(dof / 2, y);
  }
  // Half-integer shape: Q(1/2, y) = erfc(sqrt(y)), then climb with
  // Q(a+1, y) = Q(a, y) + y^a e^{-y} / Gamma(a+1).
  double q = std::erfc(std::sqrt(y));
  double a = 0.5;
  for (int step = 0; step < dof / 2; ++step) {
    const double log_inc = a * std::log(y) - y - std::lgamma(a + 1.0);
    q += std::exp(log_inc);
    a += 1.0;
  }
  return std::min(q, 1.0);
}

ChiSquareFit chi_square_poisson_fit(const std::vector<std::int64_t>& counts,
                                    double theta, double min_expected) {
  if (!(theta > 0.0)) {
    throw std::domain_error("chi_square_poisson_fit: require theta > 0");
  }
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw std::invalid_argument("chi_square_poisson_fit: negative count");
    total += c;
  }
  if (total == 0) {
    throw std::invalid_argument("chi_square_poisson_fit: empty histogram");
  }
  const double n = static_cast<double>(total);

  // Leading cells while the expected count stays comfortable, everything
  // else pooled into one tail cell (whose expectation is the gamma tail,
  // avoiding a 1 - sum cancellation).
  double pmf = std::exp(-theta);
  double cum = 0.0;
  ChiSquareFit fit;
  double stat = 0.0;
  int k = 0;
  std::int64_t observed_pool = total;
  while (true) {
    const double expected = n * pmf;
    const double tail_expected = n * (1.0 - cum - pmf);
    if (expected < min_expected || tail_expected < min_expected) break;
    const std::int64_t obs =
        k < static_cast<int>(counts.size()) ? counts[static_cast<std::size_t>(k)] : 0;
    const double d = static_cast<double>(obs) - expected;
    stat += d * d / expected;
    observed_pool -= obs;
    cum += pmf;
    ++k;
    pmf *= theta / k;
  }
  if (k < 1) {
    throw std::invalid_argument(
        "chi_square_poisson_fit: too few samples for even one cell");
  }
  const double tail_expected = n * regularized_gamma_lower(k, theta);
  const double d = static_cast<double>(observed_pool) - tail_expected;
  stat += d * d / tail_expected;
  fit.statistic = stat;
  fit.bins_used = k + 1;
  fit.dof = k;  // bins - 1, theta not fitted
  fit.p_value = chi_square_survival(stat, fit.dof);
  return fit;
}

double ks_statistic_sorted(const std::vector<double>& sorted_samples,
                           const std::function<double(double)>& cdf) {
  if (sorted_samples.empty()) {
    throw std::invalid_argument("ks_statistic_sorted: empty sample");
  }
  const double n = static_cast<double>(sorted_samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf(sorted_samples[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    worst = std::max(worst, std::max(std::abs(f - lo), std::abs(hi - f)));
  }
  return worst;
}

}  // namespace fadq
