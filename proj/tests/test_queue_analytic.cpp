#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "fadq/queue_analytic.hpp"
#include "fadq/special.hpp"

using namespace fadq;

// High-precision references for theta = 0.5 (40-digit arithmetic, rounded).
namespace ref {
constexpr double pi1 = 0.32436063535006407;
constexpr double pi2 = 0.12259996120442651;
constexpr double decay = 0.28466813704083846;  // 1/3.5128624172523394
constexpr double mean_v = 0.39496050195062544;
constexpr double mean_v0_cond = 0.46145531624186523;
constexpr double mean_d = 1.1449605019506254;
}  // namespace ref

TEST_CASE("per-block completions are Poisson distributed") {
  CHECK(service_pmf(0.5, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(service_pmf(0.5, 2) ==
        doctest::Approx(std::exp(-0.5) * 0.125).epsilon(1e-14));
  CompensatedSum total;
  for (int k = 0; k <= 60; ++k) total.add(service_pmf(0.5, k));
  CHECK(total.value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(service_pmf(0.5, -1), std::domain_error);

  CHECK(service_pgf(0.5, 1.0) == 1.0);
  CHECK(service_pgf(0.5, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(service_pgf(0.3, 2.0) == doctest::Approx(std::exp(0.3)).epsilon(1e-15));
}

TEST_CASE("queue pgf: boundary values and removable singularity") {
  for (double theta : {0.2, 0.5, 0.8}) {
    CHECK(stationary_pgf(theta, 0.0) ==
          doctest::Approx(1.0 - theta).epsilon(1e-15));
    CHECK(stationary_pgf(theta, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // the z = 1 expansion must splice smoothly onto the direct formula
    for (double w : {-3e-8, -1.2e-8, 1.2e-8, 3e-8}) {
      const double direct = (1.0 - theta) * (-w) /
                            (1.0 - (1.0 + w) * std::exp(-theta * w));
      CHECK(stationary_pgf(theta, 1.0 + w) ==
            doctest::Approx(direct).epsilon(1e-7));
    }
    // mean from a central derivative at z = 1
    const double h = 1e-5;
    const double mean =
        (stationary_pgf(theta, 1.0 + h) - stationary_pgf(theta, 1.0 - h)) /
        (2.0 * h);
    CHECK(mean == doctest::Approx(mean_queue_length(theta)).epsilon(1e-6));
  }
  const double z_star = 1.0 / decay_rate(0.5);
  CHECK_THROWS_AS(stationary_pgf(0.5, z_star), std::domain_error);
  CHECK_THROWS_AS(stationary_pgf(0.5, z_star + 0.5), std::domain_error);
  CHECK_THROWS_AS(stationary_pgf(0.5, -z_star), std::domain_error);
  CHECK(std::isfinite(stationary_pgf(0.5, 0.999 * z_star)));
  CHECK(std::isfinite(stationary_pgf(0.5, -0.9)));
}

TEST_CASE("series inversion reproduces the reference distribution") {
  const StationaryDistribution dist = stationary_distribution(0.5, 1e-12);
  REQUIRE(dist.probabilities.size() >= 10);
  CHECK(dist.probabilities[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(dist.probabilities[1] == doctest::Approx(ref::pi1).epsilon(1e-13));
  CHECK(dist.probabilities[2] == doctest::Approx(ref::pi2).epsilon(1e-13));
  CHECK(dist.decay_rate == doctest::Approx(ref::decay).epsilon(1e-13));
  CHECK(dist.theta == 0.5);
  CHECK(dist.truncation_N + 1 == static_cast<int>(dist.probabilities.size()));
  CHECK(dist.tail_mass_bound <= 1e-12);
  CHECK(dist.tail_mass_bound >= 0.0);
  for (double p : dist.probabilities) CHECK(p >= 0.0);

  CompensatedSum mass;
  for (double p : dist.probabilities) mass.add(p);
  CHECK(std::abs(mass.value() + dist.tail_mass_bound - 1.0) <= 1e-12);
}

TEST_CASE("series evaluated through its pgf ties both routes together") {
  for (double theta : {0.2, 0.5, 0.8}) {
    const StationaryDistribution dist = stationary_distribution(theta, 1e-12);
    for (double z : {-0.8, 0.3, 0.9}) {
      CompensatedSum s;
      double zk = 1.0;
      for (double p : dist.probabilities) {
        s.add(p * zk);
        zk *= z;
      }
      CHECK(s.value() == doctest::Approx(stationary_pgf(theta, z)).epsilon(1e-10));
    }
  }
}

TEST_CASE("tail settles onto the geometric decay rate") {
  SeriesOptions opt;
  opt.tail_tol = 1e-18;
  const StationaryDistribution dist = stationary_distribution(0.5, opt);
  REQUIRE(dist.probabilities.size() >= 32);
  const double q = dist.decay_rate;
  CHECK(std::abs(dist.probabilities[20] / dist.probabilities[19] - q) <
        0.02 * q);
  CHECK(std::abs(dist.probabilities[31] / dist.probabilities[30] - q) <
        0.02 * q);
}

TEST_CASE("series and closed-form mean agree across loads") {
  for (double theta : {0.2, 0.5, 0.8}) {
    const StationaryDistribution dist = stationary_distribution(theta, 1e-12);
    CompensatedSum mean;
    for (std::size_t k = 0; k < dist.probabilities.size(); ++k) {
      mean.add(static_cast<double>(k) * dist.probabilities[k]);
    }
    CHECK(mean.value() ==
          doctest::Approx(mean_queue_length(theta)).epsilon(1e-9));
  }
  CHECK(mean_queue_length(0.5) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("series options are validated and budgeted") {
  CHECK_THROWS_AS(stationary_distribution(0.5, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(stationary_distribution(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(stationary_distribution(0.5, -1e-9), std::invalid_argument);
  SeriesOptions starved;
  starved.term_budget = 10;
  CHECK_THROWS_AS(stationary_distribution(0.8, starved), std::runtime_error);
}

TEST_CASE("sign fault hook corrupts the distribution visibly") {
  SeriesOptions faulty;
  faulty.negate_first_phi_term = true;
  const StationaryDistribution dist = stationary_distribution(0.5, faulty);
  CHECK(std::abs(dist.probabilities[0] - 0.5) > 0.05);
}

TEST_CASE("analytic window and stability guard every entry point") {
  CHECK_THROWS_AS(stationary_distribution(1e-7), std::domain_error);
  CHECK_THROWS_AS(stationary_distribution(1.0 - 1e-7), std::domain_error);
  CHECK_THROWS_AS(mean_delay(1.0), std::domain_error);
  CHECK_THROWS_AS(mean_queue_length(-0.2), std::domain_error);
  CHECK_THROWS_AS(decay_rate(0.0), std::domain_error);
  CHECK_THROWS_AS(mean_vestige(1.5), std::domain_error);
  CHECK_THROWS_AS(service_pgf(2.0, 0.5), std::domain_error);
  try {
    stationary_distribution(1.3);
    FAIL("expected a throw");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("unstable") != std::string::npos);
  }
}

TEST_CASE("vestige mean stays below half a block and matches references") {
  CHECK(mean_vestige(0.5) == doctest::Approx(ref::mean_v).epsilon(1e-10));
  CHECK(mean_vestige(0.1) == doctest::Approx(0.193746435714).epsilon(1e-9));
  CHECK(mean_vestige(0.3) == doctest::Approx(0.330926601385).epsilon(1e-9));
  CHECK(mean_vestige(0.7) == doctest::Approx(0.431114048633).epsilon(1e-9));
  CHECK(mean_vestige(0.9) == doctest::Approx(0.453298864067).epsilon(1e-9));
  double prev = 0.0;
  for (double theta = 0.05; theta < 0.96; theta += 0.05) {
    const double v = mean_vestige(theta);
    CHECK(v < 0.5);
    CHECK(v > prev);  // heavier load, fuller final blocks
    prev = v;
  }
}

TEST_CASE("vestige assembled from conditional pieces matches the direct integral") {
  for (double theta = 0.01; theta < 1.0; theta += 0.01) {
    CAPTURE(theta);
    CHECK(std::abs(mean_vestige(theta) - mean_vestige_by_components(theta)) <=
          1e-10);
  }
  CHECK(mean_vestige_v0_conditional(0.5) ==
        doctest::Approx(ref::mean_v0_cond).epsilon(1e-10));
}

TEST_CASE("zero-span vestige law") {
  CHECK(vestige_cdf_v0(0.5, 1.0, false) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(vestige_cdf_v0(0.5, 1.0, true) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(vestige_cdf_v0(0.5, 0.3, false) ==
        doctest::Approx(std::exp(-0.5 / 0.3)).epsilon(1e-14));
  // conditioning on finishing inside one block rescales by e^theta
  for (double x = 0.05; x <= 1.0; x += 0.05) {
    CHECK(vestige_cdf_v0(0.4, x, true) ==
          doctest::Approx(vestige_cdf_v0(0.4, x, false) * std::exp(0.4))
              .epsilon(1e-13));
  }
  CHECK(vestige_cdf_v0(0.5, 8.0, false) <= 1.0);
  CHECK_THROWS_AS(vestige_cdf_v0(0.5, 0.0, false), std::domain_error);
  CHECK_THROWS_AS(vestige_cdf_v0(0.5, 1.2, true), std::domain_error);
}

TEST_CASE("boundary-spanning vestige law") {
  const VestigeModel model(0.5, 0.5, 1.0);
  CHECK(vestige_uk_cdf(model, 1, 0.2, false) ==
        doctest::Approx(std::exp(-0.3)).epsilon(1e-14));
  // conditional cdf runs 0 -> 1 over (0, Lp) and never decreases
  double prev = 0.0;
  for (double x = 1e-6; x < 0.5; x += 0.01) {
    const double c = vestige_uk_cdf(model, 2, x, true);
    CHECK(c >= prev - 1e-15);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    prev = c;
  }
  CHECK(vestige_uk_cdf(model, 2, 1e-12, true) <= 1e-9);
  CHECK(vestige_uk_cdf(model, 2, 0.5 - 1e-12, true) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(vestige_uk_cdf(model, 0, 0.2, false), std::domain_error);
  CHECK_THROWS_AS(vestige_uk_cdf(model, 1, 0.5, false), std::domain_error);
  CHECK_THROWS_AS(vestige_uk_cdf(model, 1, -0.1, true), std::domain_error);
  CHECK_THROWS_AS(VestigeModel(0.5, 0.5, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(VestigeModel(0.5, -0.5, -1.0), std::invalid_argument);
}

TEST_CASE("delay decomposition") {
  const DelayBreakdown d = mean_delay(0.5);
  CHECK(d.mean_service == 0.5);
  CHECK(d.mean_wait == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d.mean_vestige == doctest::Approx(ref::mean_v).epsilon(1e-10));
  CHECK(d.mean_delay == doctest::Approx(ref::mean_d).epsilon(1e-12));
  CHECK(std::abs(d.mean_service + d.mean_wait + d.mean_vestige - d.mean_delay) <=
        1e-15);
  // coarse published-style reference digits
  CHECK(std::abs(d.mean_delay - 1.14524) <= 1e-3);

  for (double theta : {0.1, 0.3, 0.7, 0.9}) {
    const DelayBreakdown b = mean_delay(theta);
    CHECK(b.mean_service == theta);
    CHECK(b.mean_wait ==
          doctest::Approx(theta * theta / (2.0 * (1.0 - theta))).epsilon(1e-15));
    CHECK(b.mean_delay > theta + b.mean_wait);  // vestige is positive
  }
}
