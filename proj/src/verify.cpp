#include "fadq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fadq/markov_oracle.hpp"
#include "fadq/queue_analytic.hpp"
#include "fadq/sim.hpp"
#include "fadq/stats.hpp"

namespace fadq {

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

int VerifyReport::failures() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(),
                                        [](const CheckResult& c) { return !c.passed; }));
}

namespace {

std::string tag(const char* name, double theta) {
  std::ostringstream os;
  os << name << "[theta=" << theta << "]";
  return os.str();
}

void check(VerifyReport& report, std::string name, double observed, double bound,
           std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.observed = observed;
  c.bound = bound;
  c.passed = std::isfinite(observed) && observed <= bound;
  c.detail = std::move(detail);
  report.checks.push_back(std::move(c));
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  for (double theta : options.thetas) {
    SeriesOptions series_opt;
    series_opt.tail_tol = 1e-18;
    series_opt.negate_first_phi_term = options.inject_phi_sign_fault;
    const StationaryDistribution series = stationary_distribution(theta, series_opt);
    const std::vector<double> matrix =
        stationary_solve(build_chain(theta, options.chain_N), 1e-10);

    check(report, tag("series_pi0_vs_1_minus_theta", theta),
          std::abs(series.probabilities[0] - (1.0 - theta)), 1e-10);
    check(report, tag("matrix_pi0_vs_1_minus_theta", theta),
          std::abs(matrix[0] - (1.0 - theta)), 1e-9);

    double sup = 0.0;
    const std::size_t shared =
        std::min(series.probabilities.size(), matrix.size());
    for (std::size_t k = 0; k < shared; ++k) {
      sup = std::max(sup, std::abs(series.probabilities[k] - matrix[k]));
    }
    check(report, tag("series_vs_matrix_sup", theta), sup, 1e-8);

    double mass = 0.0;
    for (double p : series.probabilities) mass += p;
    check(report, tag("series_normalization", theta),
          std::abs(mass + series.tail_mass_bound - 1.0), 1e-8);

    double mean_series = 0.0;
    for (std::size_t k = 0; k < series.probabilities.size(); ++k) {
      mean_series += static_cast<double>(k) * series.probabilities[k];
    }
    check(report, tag("series_mean_vs_closed_form", theta),
          std::abs(mean_series - mean_queue_length(theta)), 1e-6);

    const DelayBreakdown d = mean_delay(theta);
    check(report, tag("delay_component_identity", theta),
          std::abs(d.mean_service + d.mean_wait + d.mean_vestige - d.mean_delay),
          1e-12);
    check(report, tag("vestige_two_route", theta),
          std::abs(mean_vestige(theta) - mean_vestige_by_components(theta)), 1e-10);
    check(report, tag("vestige_below_half_block", theta), d.mean_vestige,
          0.5 - 1e-12);

    // Eight independent replications per engine. Replication means are
    // independent, so their spread is an honest standard error; per-packet
    // statistics inside one run decorrelate only over busy periods, which
    // stretch like 1/(1-theta)^2 and starve a single-stream error bar.
    SimConfig cfg;
    cfg.theta = theta;
    cfg.replications = 8;
    cfg.num_blocks = std::max<std::int64_t>(options.num_blocks / 8, 10);
    cfg.seed = options.seed;
    cfg.engine = Engine::continuous;
    const ReplicationReport cont = replicate(cfg);
    cfg.engine = Engine::discrete;
    const ReplicationReport disc = replicate(cfg);

    const MetricSummary& m_delay = cont.metrics.at("mean_delay");
    check(report, tag("sim_delay_vs_closed_form", theta),
          std::abs(m_delay.mean - d.mean_delay), 3.5 * m_delay.std_error);
    const MetricSummary& m_vestige = cont.metrics.at("mean_vestige");
    check(report, tag("sim_vestige_vs_closed_form", theta),
          std::abs(m_vestige.mean - d.mean_vestige), 3.5 * m_vestige.std_error);
    const MetricSummary& m_p0 = cont.metrics.at("p0_departure");
    check(report, tag("sim_p0_vs_1_minus_theta", theta),
          std::abs(m_p0.mean - (1.0 - theta)), 3.5 * m_p0.std_error);
    check(report, tag("engine_tv_distance", theta),
          tv_distance(cont.merged_departure.normalized(),
                      disc.merged_departure.normalized()),
          0.01);
    check(report, tag("epoch_tv_distance", theta),
          tv_distance(cont.merged_departure.normalized(),
                      cont.merged_boundary.normalized()),
          0.01);
    const ChiSquareFit fit =
        chi_square_poisson_fit(cont.merged_service.counts, theta);
    // p-value check flips direction: fail when the fit is too bad.
    {
      CheckResult c;
      c.name = tag("service_poisson_gof_pvalue", theta);
      c.observed = fit.p_value;
      c.bound = 0.01;
      c.passed = fit.p_value > 0.01;
      std::ostringstream os;
      os << "chi2=" << fit.statistic << " dof=" << fit.dof;
      c.detail = os.str();
      report.checks.push_back(std::move(c));
    }

    // Geometric tail probes, well resolved only at moderate theta.
    if (theta > 0.35 && theta < 0.65) {
      const double q = decay_rate(theta);
      const auto& pi = series.probabilities;
      if (pi.size() > 31) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (int k = 10; k <= 30; ++k) {
          const double y = std::log(pi[static_cast<std::size_t>(k)]);
          sx += k;
          sy += y;
          sxx += static_cast<double>(k) * k;
          sxy += k * y;
          ++m;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        check(report, tag("tail_log_slope_vs_decay", theta),
              std::abs(slope - std::log(q)) / std::abs(std::log(q)), 0.05);
        check(report, tag("tail_ratio_vs_decay", theta),
              std::abs(pi[31] / pi[30] - q) / q, 0.02);
      }
    }
  }
  return report;
}

}  // namespace fadq
