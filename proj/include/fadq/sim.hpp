#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fadq/channel.hpp"

namespace fadq {

enum class Engine { continuous, discrete };

// Integer-valued histogram with a hard support cap; values at or past the
// cap are lumped into the final bin.
struct Histogram {
  static constexpr int kCap = 10000;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  void record(std::int64_t value);
  std::vector<double> normalized() const;
  double mean() const;
  double overflow_mass() const;  // fraction lumped at the cap
  void merge(const Histogram& other);
};

struct SimConfig {
  Engine engine = Engine::continuous;
  CapacityMode capacity_mode = CapacityMode::low_snr;
  // Load when no explicit channel is given; the run then uses a canonical
  // unit-nu channel so that queueing quantities come out in blocks directly.
  double theta = 0.5;
  // Mean SNR of the canonical exact-mode channel (only read when
  // capacity_mode == exact and no explicit channel is set).
  double exact_rho = 0.01;
  std::optional<ChannelParams> channel;  // explicit physical channel
  std::optional<double> rate_R;          // required alongside channel
  std::int64_t num_blocks = 1'000'000;
  std::int64_t warmup_blocks = -1;  // negative: default rule, see resolved_warmup
  std::uint64_t seed = 1;
  int replications = 1;
  bool keep_samples = true;  // false drops per-packet sample vectors

  ChannelParams resolved_channel() const;
  TrafficParams resolved_traffic() const;
  // Explicit value if set (must stay below num_blocks), otherwise
  // max(10^4, 10/(1-theta)^2) clamped to num_blocks / 5.
  std::int64_t resolved_warmup() const;
};

struct SimStats {
  // Config echo.
  Engine engine = Engine::continuous;
  CapacityMode capacity_mode = CapacityMode::low_snr;
  double theta = 0.0;
  double nu = 0.0;
  double packet_size_Lp = 0.0;
  double snr_rho = 0.0;
  std::int64_t num_blocks = 0;
  std::int64_t warmup_blocks = 0;
  std::uint64_t seed = 0;
  bool unstable = false;  // theta >= 1: run proceeds, stationary claims void
  bool histogram_overflow_flagged = false;

  // Queue length sampled right after each departure, and at block
  // boundaries (continuous engine only for the latter).
  Histogram queue_length_departure;
  Histogram queue_length_boundary;
  // Blocks-spanned service per departed packet (per-block draw for the
  // discrete engine).
  Histogram service_time_blocks;

  std::vector<double> delay_samples;       // blocks, per departed packet
  std::vector<double> vestige_samples;     // sub-block remainder per packet
  std::vector<double> vestige_t0_samples;  // vestige of zero-span packets

  std::int64_t packets_departed = 0;  // post-warmup departures
  std::int64_t arrivals_counted = 0;  // post-warmup arrivals
  std::int64_t idle_blocks = 0;       // blocks with leftover capability
  double total_nats_offered = 0.0;
  double total_nats_served = 0.0;
  double final_buffer_nats = 0.0;

  double mean_delay() const;
  double delay_std_error() const;
  double mean_vestige() const;
  double vestige_std_error() const;
  double mean_queue_departure() const;
  double mean_queue_boundary() const;
  double p0_departure() const;
  double p0_boundary() const;
  double mean_service_blocks() const;

  // Accumulators for the means above; valid whether or not samples are kept.
  double delay_sum = 0.0, delay_sq_sum = 0.0;
  double vestige_sum = 0.0, vestige_sq_sum = 0.0;
};

SimStats run_simulation(const SimConfig& config);

struct BinComparison {
  int k = 0;
  double p_departure = 0.0;
  double p_boundary = 0.0;
  double z_score = 0.0;
};

// Departure-epoch vs block-boundary queue-length comparison; the two laws
// coincide in steady state, so TV should be at noise level.
struct EpochComparison {
  double tv = 0.0;
  std::vector<BinComparison> bins;
};

EpochComparison compare_epochs(const SimStats& stats);

struct MetricSummary {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> per_replication;
};

struct ReplicationReport {
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::map<std::string, MetricSummary> metrics;
  Histogram merged_departure;
  Histogram merged_boundary;
  Histogram merged_service;
  std::int64_t packets_departed = 0;
};

// Runs config.replications independent copies (seeds seed, seed+1, ...) in
// parallel and aggregates; result is identical regardless of scheduling.
ReplicationReport replicate(const SimConfig& config);

// JSON serializations; manifest_name lands in a "manifest" field so every
// data file names the manifest that produced it.
std::string stats_to_json(const SimStats& stats, const std::string& manifest_name);
std::string report_to_json(const ReplicationReport& report, const SimConfig& config,
                           const std::string& manifest_name);

}  // namespace fadq
