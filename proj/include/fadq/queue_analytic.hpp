#pragma once

#include <cstdint>
#include <vector>

namespace fadq {

// Stationary queue-length distribution of the embedded chain
// L' = max(L - 1, 0) + T with T ~ Poisson(theta), truncated where the
// certified geometric tail bound drops below tail_tol.
struct StationaryDistribution {
  double theta = 0.0;
  std::vector<double> probabilities;  // pi_0 .. pi_N
  int truncation_N = 0;
  double tail_mass_bound = 0.0;  // certified bound on 1 - sum(probabilities)
  double decay_rate = 0.0;       // 1/z*, the asymptotic ratio pi_{k+1}/pi_k
};

struct DelayBreakdown {
  double theta = 0.0;
  double mean_service = 0.0;  // E[T] = theta blocks
  double mean_wait = 0.0;     // E[W] = theta^2 / (2(1-theta))
  double mean_vestige = 0.0;  // E[V], sub-block remainder
  double mean_delay = 0.0;    // E[D] = E[T] + E[W] + E[V]
};

// Dimensional wrapper for the per-position vestige laws: packet of Lp nats
// served at mean nu nats per block, theta = Lp / nu.
struct VestigeModel {
  double theta = 0.0;
  double packet_size_Lp = 0.0;
  double nu = 0.0;
  VestigeModel(double theta, double packet_size_Lp, double nu);
};

struct SeriesOptions {
  double tail_tol = 1e-10;                // in (0, 1e-3]
  std::int64_t term_budget = 50'000'000;  // total series terms across all phi_k
  // Test hook for the self-check suite: negates the leading term of every
  // phi_k series, corrupting pi from pi_0 on. Bypasses the internal pi_0
  // consistency gate on purpose so the corruption reaches the caller.
  bool negate_first_phi_term = false;
};

// Poisson(theta) pmf / pgf of per-block packet completions.
double service_pmf(double theta, int k);
double service_pgf(double theta, double z);

// Queue-length pgf (1-theta)(1-z) / (1 - z e^{theta(1-z)}), extended by the
// removable-singularity expansion near z = 1. Valid for |z| < z*.
double stationary_pgf(double theta, double z);

// Dominant-singularity location: returns 1/z* where z* > 1 solves
// z e^{theta(1-z)} = 1.
double decay_rate(double theta);

StationaryDistribution stationary_distribution(double theta, double tail_tol = 1e-10);
StationaryDistribution stationary_distribution(double theta,
                                               const SeriesOptions& options);

// E[L] = theta(2-theta) / (2(1-theta)).
double mean_queue_length(double theta);

// E[V] = 1/2 + int_0^1 (x-1) e^{-theta/x} dx, always < 1/2.
double mean_vestige(double theta);

// Same quantity assembled from its conditional pieces (zero-block packets,
// boundary-crossing packets); agreement with mean_vestige is a self-check.
double mean_vestige_by_components(double theta);

// E[V0 | T = 0] = 1 - e^theta int_0^1 e^{-theta/x} dx.
double mean_vestige_v0_conditional(double theta);

// P(V0 <= x) = e^{-theta/x}; conditioned on T = 0 it is e^{theta(1 - 1/x)}
// on (0, 1].
double vestige_cdf_v0(double theta, double x, bool conditioned);

// P(U_k <= x) for the vestige of a packet whose service spans k full block
// boundaries: the regularized upper gamma Q(k, (Lp - x)/nu), optionally
// conditioned on the span actually occurring (T = k).
double vestige_uk_cdf(const VestigeModel& model, int k, double x, bool conditioned);

DelayBreakdown mean_delay(double theta);

}  // namespace fadq
