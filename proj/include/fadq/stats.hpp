#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace fadq {

// Total variation distance between two normalized histograms; shorter input
// is zero-padded on the right.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// Upper tail of the chi-square law with dof degrees of freedom at stat,
// i.e. the goodness-of-fit p-value.
double chi_square_survival(double stat, int dof);

struct ChiSquareFit {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  int bins_used = 0;
};

// Pearson fit of observed integer counts (index = value) against
// Poisson(theta); bins with expected count under min_expected are pooled
// into the tail. dof = bins - 1 (theta is given, not estimated).
ChiSquareFit chi_square_poisson_fit(const std::vector<std::int64_t>& counts,
                                    double theta, double min_expected = 5.0);

// Kolmogorov-Smirnov sup |F_n - F| for an ascending sample against cdf.
double ks_statistic_sorted(const std::vector<double>& sorted_samples,
                           const std::function<double(double)>& cdf);

}  // namespace fadq
