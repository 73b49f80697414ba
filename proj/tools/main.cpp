#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fadq/channel.hpp"
#include "fadq/queue_analytic.hpp"
#include "fadq/sim.hpp"
#include "fadq/verify.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

// Exit codes: 0 success, 1 verification failure, 2 bad parameters, 3 I/O.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string iso8601_now() {
  const std::time_t tt =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Transmit power: plain number means watts; a dBW suffix is converted
// (an explicit trailing W is also accepted).
double parse_power(const std::string& text) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("--power: cannot parse '" + text + "'");
  }
  std::string suffix = text.substr(pos);
  while (!suffix.empty() && suffix.front() == ' ') suffix.erase(suffix.begin());
  for (char& c : suffix) c = static_cast<char>(std::tolower(c));
  if (suffix.empty() || suffix == "w") {
    if (!(value > 0.0)) throw std::invalid_argument("--power: watts must be > 0");
    return value;
  }
  if (suffix == "dbw") return std::pow(10.0, value / 10.0);
  throw std::invalid_argument("--power: unknown unit '" + suffix +
                              "' (use watts or dBW)");
}

struct ChannelCli {
  double bandwidth = 0.0;
  double block = 0.0;
  double rate = 0.0;
  double rho = 0.0;
  std::string power;
  double noise_psd = 0.0;
  double distance = 1.0;
  double alpha = 2.0;
  double sigma2 = 0.5;
  double theta = 0.0;
  CLI::Option* opt_theta = nullptr;
  CLI::Option* opt_bandwidth = nullptr;
  CLI::Option* opt_block = nullptr;
  CLI::Option* opt_rate = nullptr;
  CLI::Option* opt_rho = nullptr;
  CLI::Option* opt_power = nullptr;
  CLI::Option* opt_noise = nullptr;
};

void add_channel_flags(CLI::App* cmd, ChannelCli& c) {
  c.opt_theta = cmd->add_option(
      "--theta", c.theta, "offered load: packet nats / mean block payload");
  c.opt_bandwidth =
      cmd->add_option("--bandwidth", c.bandwidth, "channel bandwidth W [Hz]");
  c.opt_block =
      cmd->add_option("--block", c.block, "fading block length TB [s]");
  c.opt_rate = cmd->add_option("--rate", c.rate, "source rate R [nats/s]");
  c.opt_rho = cmd->add_option("--rho", c.rho, "mean received SNR (linear)");
  c.opt_power = cmd->add_option(
      "--power", c.power, "transmit power, watts by default or dBW suffix");
  c.opt_noise =
      cmd->add_option("--noise-psd", c.noise_psd, "noise PSD N0 [W/Hz]");
  cmd->add_option("--distance", c.distance, "link distance d [m]");
  cmd->add_option("--alpha", c.alpha, "path-loss exponent");
  cmd->add_option("--sigma2", c.sigma2, "per-component Rayleigh variance");
  for (CLI::Option* o : {c.opt_bandwidth, c.opt_block, c.opt_rate, c.opt_rho,
                         c.opt_power, c.opt_noise}) {
    c.opt_theta->excludes(o);
  }
}

struct ResolvedTraffic {
  double theta = 0.0;
  std::optional<fadq::ChannelParams> channel;
  std::optional<double> rate;
};

ResolvedTraffic resolve_traffic(const ChannelCli& c) {
  if (c.opt_theta->count() > 0) {
    return {c.theta, std::nullopt, std::nullopt};
  }
  if (c.opt_bandwidth->count() == 0 && c.opt_rho->count() == 0 &&
      c.opt_power->count() == 0) {
    throw std::invalid_argument(
        "give either --theta or the physical path (--bandwidth --block --rate "
        "with --rho, or with --power and --noise-psd)");
  }
  if (c.opt_bandwidth->count() == 0 || c.opt_block->count() == 0 ||
      c.opt_rate->count() == 0) {
    throw std::invalid_argument(
        "physical path needs --bandwidth, --block and --rate");
  }
  fadq::ChannelParams ch;
  if (c.opt_rho->count() > 0) {
    if (c.opt_power->count() > 0 || c.opt_noise->count() > 0) {
      throw std::invalid_argument("--rho conflicts with --power/--noise-psd");
    }
    ch = fadq::ChannelParams::from_snr(c.bandwidth, c.block, c.rho);
  } else {
    if (c.opt_power->count() == 0 || c.opt_noise->count() == 0) {
      throw std::invalid_argument(
          "physical path needs --rho, or both --power and --noise-psd");
    }
    ch = fadq::ChannelParams::from_physical(c.bandwidth, c.block,
                                            parse_power(c.power), c.noise_psd,
                                            c.distance, c.alpha, c.sigma2);
  }
  const fadq::TrafficParams tr = fadq::derive_params(ch, c.rate);
  return {tr.load_theta, ch, c.rate};
}

json channel_json(const fadq::ChannelParams& ch) {
  json j;
  j["bandwidth_hz"] = ch.bandwidth_W;
  j["block_length_s"] = ch.block_length_TB;
  j["snr_rho"] = ch.snr_rho;
  j["tx_power_w"] = ch.tx_power_P;
  j["distance_m"] = ch.distance_d;
  j["pathloss_alpha"] = ch.pathloss_alpha;
  j["rayleigh_sigma2"] = ch.rayleigh_sigma2;
  if (ch.noise_psd_N0.has_value()) j["noise_psd_w_per_hz"] = *ch.noise_psd_N0;
  j["nu_nats_per_block"] = ch.nu();
  return j;
}

json make_manifest(const std::string& subcommand, const json& parameters,
                   const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "fadq";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["generated_utc"] = iso8601_now();
  m["parameters"] = parameters;
  m["outputs"] = outputs;
  return m;
}

// Analytic results depend on theta and tail_tol alone, so the same load
// reached through physical flags serializes to identical bytes.
std::string analytic_json(double theta, double tail_tol, const json& manifest_ref) {
  const fadq::StationaryDistribution dist =
      fadq::stationary_distribution(theta, tail_tol);
  const fadq::DelayBreakdown d = fadq::mean_delay(theta);
  json root;
  root["manifest"] = manifest_ref;
  root["theta"] = theta;
  root["tail_tol"] = tail_tol;
  json stationary;
  stationary["formula"] =
      "pi_k = phi_{k-1} - phi_k, phi_k = (1-theta) sum_{j>=1} (j theta)^{k+j} "
      "e^{-j theta} / (k+j)!";
  stationary["truncation_N"] = dist.truncation_N;
  stationary["tail_mass_bound"] = dist.tail_mass_bound;
  stationary["pi"] = dist.probabilities;
  stationary["decay_rate"] = {
      {"value", dist.decay_rate},
      {"formula", "1/z*, z* > 1 root of z e^{theta(1-z)} = 1"}};
  root["stationary"] = stationary;
  root["moments"] = {
      {"mean_queue",
       {{"value", fadq::mean_queue_length(theta)},
        {"formula", "theta (2-theta) / (2 (1-theta))"}}}};
  root["delay"] = {
      {"mean_service", {{"value", d.mean_service}, {"formula", "E[T] = theta"}}},
      {"mean_wait",
       {{"value", d.mean_wait}, {"formula", "E[W] = theta^2 / (2 (1-theta))"}}},
      {"mean_vestige",
       {{"value", d.mean_vestige},
        {"formula", "E[V] = 1/2 + int_0^1 (x-1) e^{-theta/x} dx"}}},
      {"mean_delay",
       {{"value", d.mean_delay}, {"formula", "E[D] = E[T] + E[W] + E[V]"}}}};
  return root.dump(2) + "\n";
}

int cmd_analytic(const ChannelCli& flags, double tail_tol,
                 const std::string& out_path) {
  const ResolvedTraffic rt = resolve_traffic(flags);
  if (out_path.empty()) {
    std::cout << analytic_json(rt.theta, tail_tol, nullptr);
    return 0;
  }
  const fs::path out(out_path);
  const std::string manifest_name = out.filename().string() + ".manifest.json";
  const std::string payload = analytic_json(rt.theta, tail_tol, manifest_name);
  json params;
  params["theta"] = rt.theta;
  params["tail_tol"] = tail_tol;
  if (rt.channel.has_value()) {
    params["channel"] = channel_json(*rt.channel);
    params["rate_nats_per_s"] = *rt.rate;
  }
  const json manifest =
      make_manifest("analytic", params, {out.filename().string()});
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_atomic(out, payload);
  write_atomic(out.parent_path() / manifest_name, manifest.dump(2) + "\n");
  return 0;
}

int cmd_sweep(double theta_min, double theta_max, int points,
              std::vector<double> pi_thetas, double tail_tol,
              const std::string& outdir) {
  if (points < 2) throw std::invalid_argument("--points must be >= 2");
  if (!(theta_min < theta_max)) {
    throw std::invalid_argument("need --theta-min < --theta-max");
  }
  if (pi_thetas.empty()) pi_thetas = {0.2, 0.5, 0.8};
  const fs::path dir(outdir);
  fs::create_directories(dir);
  const std::string manifest_name = "manifest.json";
  std::vector<std::string> outputs;

  std::ostringstream delay_csv;
  delay_csv << "# manifest: " << manifest_name << "\n";
  delay_csv << "theta,E_T,E_W,E_V,E_D\n";
  for (int i = 0; i < points; ++i) {
    const double theta =
        theta_min + (theta_max - theta_min) * i / static_cast<double>(points - 1);
    const fadq::DelayBreakdown d = fadq::mean_delay(theta);
    delay_csv << fmt17(d.theta) << ',' << fmt17(d.mean_service) << ','
              << fmt17(d.mean_wait) << ',' << fmt17(d.mean_vestige) << ','
              << fmt17(d.mean_delay) << "\n";
  }
  write_atomic(dir / "delay_vs_theta.csv", delay_csv.str());
  outputs.push_back("delay_vs_theta.csv");

  for (double theta : pi_thetas) {
    const fadq::StationaryDistribution dist =
        fadq::stationary_distribution(theta, tail_tol);
    char label[32];
    std::snprintf(label, sizeof label, "%g", theta);
    const std::string name = std::string("pi_vs_k_theta_") + label + ".csv";
    std::ostringstream csv;
    csv << "# manifest: " << manifest_name << "\n";
    csv << "k,pi_k,ln_pi_k\n";
    for (std::size_t k = 0; k < dist.probabilities.size(); ++k) {
      const double p = dist.probabilities[k];
      if (p <= 0.0) continue;
      csv << k << ',' << fmt17(p) << ',' << fmt17(std::log(p)) << "\n";
    }
    write_atomic(dir / name, csv.str());
    outputs.push_back(name);
  }

  json params;
  params["theta_min"] = theta_min;
  params["theta_max"] = theta_max;
  params["points"] = points;
  params["pi_thetas"] = pi_thetas;
  params["tail_tol"] = tail_tol;
  write_atomic(dir / manifest_name,
               make_manifest("sweep", params, outputs).dump(2) + "\n");
  return 0;
}

std::string histogram_csv(const fadq::Histogram& h, const std::string& manifest_name) {
  std::ostringstream csv;
  csv << "# manifest: " << manifest_name << "\n";
  csv << "k,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (h.counts[k] != 0) csv << k << ',' << h.counts[k] << "\n";
  }
  return csv.str();
}

int cmd_simulate(const ChannelCli& flags, const fadq::SimConfig& base,
                 const std::string& outdir) {
  fadq::SimConfig cfg = base;
  const ResolvedTraffic rt = resolve_traffic(flags);
  cfg.theta = rt.theta;
  cfg.channel = rt.channel;
  cfg.rate_R = rt.rate;

  const fs::path dir(outdir);
  fs::create_directories(dir);
  const std::string manifest_name = "manifest.json";
  std::vector<std::string> outputs = {"stats.json", "queue_departure.csv",
                                      "service_time.csv"};

  std::string stats_payload;
  fadq::Histogram dep, bnd, srv;
  bool continuous = cfg.engine == fadq::Engine::continuous;
  if (cfg.replications >= 2) {
    const fadq::ReplicationReport report = fadq::replicate(cfg);
    stats_payload = fadq::report_to_json(report, cfg, manifest_name);
    dep = report.merged_departure;
    bnd = report.merged_boundary;
    srv = report.merged_service;
  } else {
    const fadq::SimStats stats = fadq::run_simulation(cfg);
    stats_payload = fadq::stats_to_json(stats, manifest_name);
    dep = stats.queue_length_departure;
    bnd = stats.queue_length_boundary;
    srv = stats.service_time_blocks;
  }

  write_atomic(dir / "stats.json", stats_payload);
  write_atomic(dir / "queue_departure.csv", histogram_csv(dep, manifest_name));
  if (continuous) {
    write_atomic(dir / "queue_boundary.csv", histogram_csv(bnd, manifest_name));
    outputs.insert(outputs.begin() + 2, "queue_boundary.csv");
  }
  write_atomic(dir / "service_time.csv", histogram_csv(srv, manifest_name));

  json params;
  params["engine"] = continuous ? "continuous" : "discrete";
  params["capacity_mode"] =
      cfg.capacity_mode == fadq::CapacityMode::low_snr ? "low_snr" : "exact";
  params["theta"] = cfg.theta;
  if (cfg.capacity_mode == fadq::CapacityMode::exact && !cfg.channel.has_value()) {
    params["exact_rho"] = cfg.exact_rho;
  }
  if (rt.channel.has_value()) {
    params["channel"] = channel_json(*rt.channel);
    params["rate_nats_per_s"] = *rt.rate;
  }
  params["num_blocks"] = cfg.num_blocks;
  params["warmup_blocks"] = cfg.resolved_warmup();
  params["seed"] = cfg.seed;
  params["replications"] = cfg.replications;
  if (cfg.replications >= 2) {
    json seeds = json::array();
    for (int i = 0; i < cfg.replications; ++i) {
      seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
    }
    params["replication_seeds"] = seeds;
  }
  write_atomic(dir / manifest_name,
               make_manifest("simulate", params, outputs).dump(2) + "\n");
  return 0;
}

int cmd_verify(const fadq::VerifyOptions& options) {
  const fadq::VerifyReport report = fadq::run_verification(options);
  for (const fadq::CheckResult& c : report.checks) {
    std::printf("%s  %-45s observed=%-12.4g bound=%-12.4g %s\n",
                c.passed ? "PASS" : "FAIL", c.name.c_str(), c.observed, c.bound,
                c.detail.c_str());
  }
  std::printf("verification: %zu/%zu checks passed\n",
              report.checks.size() - static_cast<std::size_t>(report.failures()),
              report.checks.size());
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stationary queue law and packet delay of a constant-rate "
               "stream over a block-fading channel"};
  app.set_version_flag("--version", std::string("fadq ") + kVersion);
  app.set_config("--config", "", "read options from an INI file");
  app.require_subcommand(1);

  auto* analytic = app.add_subcommand(
      "analytic", "stationary distribution and delay decomposition");
  ChannelCli an_flags;
  add_channel_flags(analytic, an_flags);
  double an_tail_tol = 1e-10;
  std::string an_out;
  analytic->add_option("--tail-tol", an_tail_tol,
                       "certified bound on truncated tail mass");
  analytic->add_option("--out", an_out,
                       "write JSON here (with a manifest sidecar) instead of stdout");

  auto* sweep = app.add_subcommand(
      "sweep", "delay decomposition over a load grid plus tail tables");
  double sw_min = 0.05, sw_max = 0.95, sw_tail_tol = 1e-10;
  int sw_points = 19;
  std::vector<double> sw_pi_thetas;
  std::string sw_outdir;
  sweep->add_option("--theta-min", sw_min, "grid start");
  sweep->add_option("--theta-max", sw_max, "grid end");
  sweep->add_option("--points", sw_points, "grid size");
  sweep->add_option("--pi-theta", sw_pi_thetas,
                    "loads for per-k tables (default 0.2 0.5 0.8)");
  sweep->add_option("--tail-tol", sw_tail_tol, "tail bound for per-k tables");
  sweep->add_option("--outdir", sw_outdir, "output directory")->required();

  auto* simulate =
      app.add_subcommand("simulate", "run one of the two queue simulators");
  ChannelCli sim_flags;
  add_channel_flags(simulate, sim_flags);
  fadq::SimConfig sim_cfg;
  std::string sim_engine = "continuous", sim_capacity = "low_snr", sim_outdir;
  double sim_blocks = 1e6, sim_warmup = -1;
  simulate->add_option("--engine", sim_engine, "continuous | discrete")
      ->check(CLI::IsMember({"continuous", "discrete"}));
  simulate->add_option("--capacity", sim_capacity, "low_snr | exact")
      ->check(CLI::IsMember({"low_snr", "exact"}));
  simulate->add_option("--exact-rho", sim_cfg.exact_rho,
                       "SNR operating point for exact capacity without a "
                       "physical channel");
  simulate->add_option("--blocks", sim_blocks, "fading blocks to simulate");
  simulate->add_option("--warmup", sim_warmup,
                       "blocks discarded before sampling (negative: default rule)");
  simulate->add_option("--seed", sim_cfg.seed, "base RNG seed");
  simulate->add_option("--replications", sim_cfg.replications,
                       "independent runs with seeds seed, seed+1, ...");
  simulate->add_option("--outdir", sim_outdir, "output directory")->required();

  auto* verify = app.add_subcommand(
      "verify", "cross-check series, matrix, closed forms and both simulators");
  fadq::VerifyOptions ver_opt;
  std::vector<double> ver_thetas;
  double ver_blocks = 1e6;
  verify->add_option("--theta", ver_thetas, "loads to verify (default 0.2 0.5 0.8)");
  verify->add_option("--blocks", ver_blocks, "simulated blocks per engine");
  verify->add_option("--seed", ver_opt.seed, "simulation seed");
  verify->add_option("--chain-N", ver_opt.chain_N, "matrix truncation");
  verify->add_flag("--inject-phi-sign-fault", ver_opt.inject_phi_sign_fault,
                   "test hook: corrupt the series sign to prove the suite fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (analytic->parsed()) return cmd_analytic(an_flags, an_tail_tol, an_out);
    if (sweep->parsed()) {
      return cmd_sweep(sw_min, sw_max, sw_points, sw_pi_thetas, sw_tail_tol,
                       sw_outdir);
    }
    if (simulate->parsed()) {
      sim_cfg.engine = sim_engine == "continuous" ? fadq::Engine::continuous
                                                  : fadq::Engine::discrete;
      sim_cfg.capacity_mode = sim_capacity == "low_snr"
                                  ? fadq::CapacityMode::low_snr
                                  : fadq::CapacityMode::exact;
      if (!(sim_blocks >= 10 && sim_blocks <= 9e18)) {
        throw std::invalid_argument("--blocks out of range");
      }
      sim_cfg.num_blocks = static_cast<std::int64_t>(sim_blocks);
      sim_cfg.warmup_blocks =
          sim_warmup < 0 ? -1 : static_cast<std::int64_t>(sim_warmup);
      return cmd_simulate(sim_flags, sim_cfg, sim_outdir);
    }
    if (verify->parsed()) {
      if (!ver_thetas.empty()) ver_opt.thetas = ver_thetas;
      if (!(ver_blocks >= 10 && ver_blocks <= 9e18)) {
        throw std::invalid_argument("--blocks out of range");
      }
      ver_opt.num_blocks = static_cast<std::int64_t>(ver_blocks);
      return cmd_verify(ver_opt);
    }
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
