#include "fadq/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace fadq {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("channel: ") + what +
                                " must be finite and > 0");
  }
}

}  // namespace

ChannelParams ChannelParams::from_snr(double bandwidth_W, double block_length_TB,
                                      double snr_rho) {
  require_positive(bandwidth_W, "bandwidth_W");
  require_positive(block_length_TB, "block_length_TB");
  require_positive(snr_rho, "snr_rho");
  ChannelParams p;
  p.bandwidth_W = bandwidth_W;
  p.block_length_TB = block_length_TB;
  p.snr_rho = snr_rho;
  return p;
}

ChannelParams ChannelParams::from_physical(double bandwidth_W,
                                           double block_length_TB,
                                           double tx_power_P, double noise_psd_N0,
                                           double distance_d,
                                           double pathloss_alpha,
                                           double rayleigh_sigma2) {
  require_positive(bandwidth_W, "bandwidth_W");
  require_positive(block_length_TB, "block_length_TB");
  require_positive(tx_power_P, "tx_power_P");
  require_positive(noise_psd_N0, "noise_psd_N0");
  require_positive(distance_d, "distance_d");
  require_positive(pathloss_alpha, "pathloss_alpha");
  require_positive(rayleigh_sigma2, "rayleigh_sigma2");
  ChannelParams p;
  p.bandwidth_W = bandwidth_W;
  p.block_length_TB = block_length_TB;
  p.tx_power_P = tx_power_P;
  p.distance_d = distance_d;
  p.pathloss_alpha = pathloss_alpha;
  p.rayleigh_sigma2 = rayleigh_sigma2;
  p.noise_psd_N0 = noise_psd_N0;
  // Mean received SNR: E[|g|^2] = 2 sigma^2 for a complex Gaussian gain.
  p.snr_rho = 2.0 * rayleigh_sigma2 * tx_power_P *
              std::pow(distance_d, -pathloss_alpha) / (bandwidth_W * noise_psd_N0);
  return p;
}

TrafficParams derive_params(const ChannelParams& channel, double rate_R) {
  require_positive(rate_R, "rate_R");
  require_positive(channel.nu(), "nu");
  TrafficParams t;
  t.rate_R = rate_R;
  t.packet_size_Lp = rate_R * channel.block_length_TB;
  t.load_theta = rate_R / (channel.bandwidth_W * channel.snr_rho);
  return t;
}

double capacity_cdf(double x, const ChannelParams& channel, CapacityMode mode) {
  if (!(x >= 0.0)) {
    throw std::domain_error("capacity_cdf: require x >= 0");
  }
  if (mode == CapacityMode::low_snr) {
    return -std::expm1(-x / channel.nu());
  }
  const double wtb = channel.bandwidth_W * channel.block_length_TB;
  return -std::expm1(-std::expm1(x / wtb) / channel.snr_rho);
}

double service_cdf(double x, const ChannelParams& channel) {
  return capacity_cdf(x, channel, CapacityMode::low_snr);
}

double cumulative_service_pdf(int k, double x, const ChannelParams& channel) {
  if (k < 1) {
    throw std::domain_error("cumulative_service_pdf: require k >= 1");
  }
  if (!(x >= 0.0)) {
    throw std::domain_error("cumulative_service_pdf: require x >= 0");
  }
  const double nu = channel.nu();
  if (x == 0.0) {
    return k == 1 ? 1.0 / nu : 0.0;
  }
  return std::exp((k - 1) * std::log(x) - x / nu - std::lgamma(static_cast<double>(k)) -
                  k * std::log(nu));
}

double block_service_from_u01(double u, const ChannelParams& channel,
                              CapacityMode mode) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw std::domain_error("block_service_from_u01: require u in [0, 1)");
  }
  if (mode == CapacityMode::low_snr) {
    return -channel.nu() * std::log1p(-u);
  }
  if (!channel.noise_psd_N0.has_value()) {
    throw std::invalid_argument(
        "block_service_from_u01: exact mode needs a physical channel "
        "(noise_psd_N0 unset)");
  }
  // |g|^2 ~ Exp(mean 2 sigma^2); instantaneous SNR = |g|^2 P d^-alpha / (W N0).
  const double gain2 = -2.0 * channel.rayleigh_sigma2 * std::log1p(-u);
  const double snr = gain2 * channel.tx_power_P *
                     std::pow(channel.distance_d, -channel.pathloss_alpha) /
                     (channel.bandwidth_W * *channel.noise_psd_N0);
  return channel.bandwidth_W * channel.block_length_TB * std::log1p(snr);
}

double sample_block_service(CounterRng& rng, const ChannelParams& channel,
                            CapacityMode mode) {
  return block_service_from_u01(rng.next_u01(), channel, mode);
}

}  // namespace fadq
