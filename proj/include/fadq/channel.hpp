#pragma once

#include <optional>

#include "fadq/rng.hpp"

namespace fadq {

// How the per-block decodable payload relates to the fading gain:
// low_snr linearizes ln(1 + rho h) to rho h (exponential service),
// exact keeps the logarithm.
enum class CapacityMode { low_snr, exact };

// Physical description of one fading block. Either constructed from a mean
// SNR directly (noise_psd_N0 empty) or from transmit-side quantities, in
// which case rho is derived and N0 retained for exact-mode sampling.
struct ChannelParams {
  double bandwidth_W = 0.0;      // Hz
  double block_length_TB = 0.0;  // s
  double tx_power_P = 1.0;       // W
  double distance_d = 1.0;       // m
  double pathloss_alpha = 1.0;
  double rayleigh_sigma2 = 0.5;  // per-component variance of the complex gain
  double snr_rho = 0.0;          // mean received SNR
  std::optional<double> noise_psd_N0;  // W/Hz

  static ChannelParams from_snr(double bandwidth_W, double block_length_TB,
                                double snr_rho);
  static ChannelParams from_physical(double bandwidth_W, double block_length_TB,
                                     double tx_power_P, double noise_psd_N0,
                                     double distance_d, double pathloss_alpha,
                                     double rayleigh_sigma2);

  // Mean nats decodable per block in the low-SNR model.
  double nu() const { return bandwidth_W * block_length_TB * snr_rho; }
};

struct TrafficParams {
  double rate_R = 0.0;          // nats/s
  double packet_size_Lp = 0.0;  // nats per packet, R * TB
  double load_theta = 0.0;      // Lp / nu = R / (W rho)
};

// theta = R/(W rho); requires R > 0. theta >= 1 is allowed here (the queue
// is then unstable, which the analytics reject but the simulator accepts).
TrafficParams derive_params(const ChannelParams& channel, double rate_R);

// P(W TB ln(1 + rho h) <= x), h ~ Exp(1): 1 - exp(-(e^{x/(W TB)} - 1)/rho).
// The low-SNR variant is the exponential CDF with mean nu.
double capacity_cdf(double x, const ChannelParams& channel, CapacityMode mode);

// Low-SNR per-block service CDF, 1 - e^{-x/nu}.
double service_cdf(double x, const ChannelParams& channel);

// Density of the sum of k i.i.d. low-SNR block services (Erlang-k, scale nu).
double cumulative_service_pdf(int k, double x, const ChannelParams& channel);

// Maps one uniform draw to a per-block service in nats. Exact mode needs the
// physical path (noise_psd_N0 present); otherwise a configuration error.
double block_service_from_u01(double u, const ChannelParams& channel,
                              CapacityMode mode);

// Sequential-stream convenience over block_service_from_u01.
double sample_block_service(CounterRng& rng, const ChannelParams& channel,
                            CapacityMode mode);

}  // namespace fadq
