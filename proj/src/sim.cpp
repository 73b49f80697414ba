#include "fadq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "fadq/rng.hpp"
#include "fadq/stats.hpp"

namespace fadq {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sample_mean(double sum, std::int64_t n) {
  return n > 0 ? sum / static_cast<double>(n) : kNan;
}

double sample_std_error(double sum, double sq_sum, std::int64_t n) {
  if (n < 2) return kNan;
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double var = std::max((sq_sum - nd * mean * mean) / (nd - 1.0), 0.0);
  return std::sqrt(var / nd);
}

}  // namespace

void Histogram::record(std::int64_t value) {
  if (value < 0) {
    throw std::logic_error("Histogram: negative value");
  }
  const std::size_t idx =
      static_cast<std::size_t>(std::min<std::int64_t>(value, kCap));
  if (idx >= counts.size()) counts.resize(idx + 1, 0);
  ++counts[idx];
  ++total;
}

std::vector<double> Histogram::normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

double Histogram::mean() const {
  if (total == 0) return kNan;
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s += static_cast<double>(i) * static_cast<double>(counts[i]);
  }
  return s / static_cast<double>(total);
}

double Histogram::overflow_mass() const {
  if (total == 0 || counts.size() <= static_cast<std::size_t>(kCap)) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(kCap)]) /
         static_cast<double>(total);
}

void Histogram::merge(const Histogram& other) {
  if (other.counts.size() > counts.size()) counts.resize(other.counts.size(), 0);
  for (std::size_t i = 0; i < other.counts.size(); ++i) counts[i] += other.counts[i];
  total += other.total;
}

ChannelParams SimConfig::resolved_channel() const {
  if (channel.has_value()) return *channel;
  if (capacity_mode == CapacityMode::low_snr) {
    // Canonical unit channel: nu = 1, so nats and blocks line up with theta.
    return ChannelParams::from_snr(1.0, 1.0, 1.0);
  }
  // Exact mode needs a real SNR operating point; keep nu = 1 by stretching
  // the block to 1/rho so results stay in blocks.
  if (!(exact_rho > 0.0)) {
    throw std::invalid_argument("SimConfig: exact capacity needs exact_rho > 0");
  }
  return ChannelParams::from_physical(1.0, 1.0 / exact_rho, exact_rho, 1.0, 1.0, 1.0,
                                      0.5);
}

TrafficParams SimConfig::resolved_traffic() const {
  const ChannelParams ch = resolved_channel();
  if (channel.has_value()) {
    if (!rate_R.has_value()) {
      throw std::invalid_argument("SimConfig: explicit channel requires rate_R");
    }
    return derive_params(ch, *rate_R);
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw std::invalid_argument("SimConfig: theta must be finite and > 0");
  }
  TrafficParams t;
  t.load_theta = theta;
  t.packet_size_Lp = theta * ch.nu();
  t.rate_R = t.packet_size_Lp / ch.block_length_TB;
  return t;
}

std::int64_t SimConfig::resolved_warmup() const {
  if (num_blocks < 10) {
    throw std::invalid_argument("SimConfig: num_blocks < 10");
  }
  if (warmup_blocks >= 0) {
    if (warmup_blocks >= num_blocks) {
      throw std::invalid_argument("SimConfig: warmup_blocks >= num_blocks");
    }
    return warmup_blocks;
  }
  const double th = resolved_traffic().load_theta;
  double w = 1e4;
  if (th < 1.0) {
    w = std::max(w, std::ceil(10.0 / ((1.0 - th) * (1.0 - th))));
  } else {
    w = std::numeric_limits<double>::infinity();  // unstable: clamp below
  }
  return std::min<std::int64_t>(static_cast<std::int64_t>(std::min(w, 9e18)),
                                num_blocks / 5);
}

double SimStats::mean_delay() const { return sample_mean(delay_sum, packets_departed); }
double SimStats::delay_std_error() const {
  return sample_std_error(delay_sum, delay_sq_sum, packets_departed);
}
double SimStats::mean_vestige() const {
  return sample_mean(vestige_sum, packets_departed);
}
double SimStats::vestige_std_error() const {
  return sample_std_error(vestige_sum, vestige_sq_sum, packets_departed);
}
double SimStats::mean_queue_departure() const { return queue_length_departure.mean(); }
double SimStats::mean_queue_boundary() const { return queue_length_boundary.mean(); }
double SimStats::p0_departure() const {
  if (queue_length_departure.total == 0 || queue_length_departure.counts.empty())
    return kNan;
  return static_cast<double>(queue_length_departure.counts[0]) /
         static_cast<double>(queue_length_departure.total);
}
double SimStats::p0_boundary() const {
  if (queue_length_boundary.total == 0 || queue_length_boundary.counts.empty())
    return kNan;
  return static_cast<double>(queue_length_boundary.counts[0]) /
         static_cast<double>(queue_length_boundary.total);
}
double SimStats::mean_service_blocks() const { return service_time_blocks.mean(); }

namespace {

struct Packet {
  double remaining;            // nats left to serve
  std::int64_t arrival_block;  // block at whose end the packet arrived
  std::int64_t service_start;  // block where it first reached the server
};

SimStats init_stats(const SimConfig& config) {
  const ChannelParams ch = config.resolved_channel();
  const TrafficParams tr = config.resolved_traffic();
  SimStats st;
  st.engine = config.engine;
  st.capacity_mode = config.capacity_mode;
  st.theta = tr.load_theta;
  st.nu = ch.nu();
  st.packet_size_Lp = tr.packet_size_Lp;
  st.snr_rho = ch.snr_rho;
  st.num_blocks = config.num_blocks;
  st.warmup_blocks = config.resolved_warmup();
  st.seed = config.seed;
  st.unstable = tr.load_theta >= 1.0;
  return st;
}

// Nats-level FIFO dynamics. Per block: draw the block's decodable payload,
// let the head packets consume it in order, sample the queue after each
// departure and at the boundary, then append the block's own arrival.
// A packet's vestige is its remaining work divided by the capability it saw
// when it (re)entered service in its final block: the full block payload if
// it was head at the block start, the leftover otherwise.
SimStats run_continuous(const SimConfig& config) {
  SimStats st = init_stats(config);
  const ChannelParams ch = config.resolved_channel();
  const double lp = st.packet_size_Lp;
  const std::int64_t warmup = st.warmup_blocks;
  CounterRng rng(config.seed);
  std::deque<Packet> buffer;

  for (std::int64_t n = 0; n < config.num_blocks; ++n) {
    const bool post = n >= warmup;
    const double payload =
        block_service_from_u01(rng.u01_at(static_cast<std::uint64_t>(n)), ch,
                               config.capacity_mode);
    double avail = payload;
    double capability = payload;
    while (!buffer.empty()) {
      Packet& head = buffer.front();
      if (head.service_start < 0) {
        head.service_start = n;
        capability = avail;
      }
      if (head.remaining < avail) {
        const double vestige = head.remaining / capability;
        avail -= head.remaining;
        capability = avail;
        const std::int64_t span = n - head.service_start;
        const double delay =
            static_cast<double>(n - head.arrival_block - 1) + vestige;
        buffer.pop_front();
        if (post) {
          ++st.packets_departed;
          st.service_time_blocks.record(span);
          st.queue_length_departure.record(
              static_cast<std::int64_t>(buffer.size()));
          st.delay_sum += delay;
          st.delay_sq_sum += delay * delay;
          st.vestige_sum += vestige;
          st.vestige_sq_sum += vestige * vestige;
          if (config.keep_samples) {
            st.delay_samples.push_back(delay);
            st.vestige_samples.push_back(vestige);
            if (span == 0) st.vestige_t0_samples.push_back(vestige);
          }
        }
      } else {
        head.remaining -= avail;
        avail = 0.0;
        break;
      }
    }
    if (post) {
      st.total_nats_served += payload - avail;
      if (avail > 0.0) ++st.idle_blocks;
      st.queue_length_boundary.record(static_cast<std::int64_t>(buffer.size()));
      ++st.arrivals_counted;
      st.total_nats_offered += lp;
    }
    buffer.push_back(Packet{lp, n, -1});
  }

  for (const Packet& p : buffer) st.final_buffer_nats += p.remaining;
  st.histogram_overflow_flagged =
      st.theta <= 0.8 && (st.queue_length_departure.overflow_mass() > 1e-6 ||
                          st.queue_length_boundary.overflow_mass() > 1e-6);
  return st;
}

std::int64_t poisson_from_u01(double u, double theta) {
  double pmf = std::exp(-theta);
  double cum = pmf;
  std::int64_t k = 0;
  while (u > cum && k < Histogram::kCap) {
    ++k;
    pmf *= theta / static_cast<double>(k);
    cum += pmf;
  }
  return k;
}

// Embedded integer chain L' = max(L - 1, 0) + T, T ~ Poisson(theta), driven
// by the same per-block uniforms as the continuous engine.
SimStats run_discrete(const SimConfig& config) {
  SimStats st = init_stats(config);
  const std::int64_t warmup = st.warmup_blocks;
  CounterRng rng(config.seed);
  std::int64_t queue = 0;
  for (std::int64_t n = 0; n < config.num_blocks; ++n) {
    const double u = rng.u01_at(static_cast<std::uint64_t>(n));
    const std::int64_t t = poisson_from_u01(u, st.theta);
    queue = std::max<std::int64_t>(queue - 1, 0) + t;
    if (n >= warmup) {
      st.queue_length_departure.record(queue);
      st.service_time_blocks.record(t);
      ++st.arrivals_counted;
      st.total_nats_offered += st.packet_size_Lp;
    }
  }
  st.final_buffer_nats = static_cast<double>(queue) * st.packet_size_Lp;
  st.histogram_overflow_flagged =
      st.theta <= 0.8 && st.queue_length_departure.overflow_mass() > 1e-6;
  return st;
}

}  // namespace

SimStats run_simulation(const SimConfig& config) {
  if (config.replications < 1) {
    throw std::invalid_argument("run_simulation: replications < 1");
  }
  (void)config.resolved_traffic();  // validate before the run starts
  (void)config.resolved_warmup();
  return config.engine == Engine::continuous ? run_continuous(config)
                                             : run_discrete(config);
}

EpochComparison compare_epochs(const SimStats& stats) {
  if (stats.engine != Engine::continuous) {
    throw std::invalid_argument(
        "compare_epochs: boundary epochs exist only in the continuous engine");
  }
  if (stats.queue_length_departure.total == 0 ||
      stats.queue_length_boundary.total == 0) {
    throw std::invalid_argument("compare_epochs: empty histogram");
  }
  const std::vector<double> p = stats.queue_length_departure.normalized();
  const std::vector<double> q = stats.queue_length_boundary.normalized();
  EpochComparison out;
  out.tv = tv_distance(p, q);
  const double np = static_cast<double>(stats.queue_length_departure.total);
  const double nq = static_cast<double>(stats.queue_length_boundary.total);
  const std::size_t bins = std::max(p.size(), q.size());
  out.bins.reserve(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    BinComparison bc;
    bc.k = static_cast<int>(k);
    bc.p_departure = k < p.size() ? p[k] : 0.0;
    bc.p_boundary = k < q.size() ? q[k] : 0.0;
    const double var = bc.p_departure * (1.0 - bc.p_departure) / np +
                       bc.p_boundary * (1.0 - bc.p_boundary) / nq;
    bc.z_score = var > 0.0 ? (bc.p_departure - bc.p_boundary) / std::sqrt(var) : 0.0;
    out.bins.push_back(bc);
  }
  return out;
}

namespace {

void add_metric(ReplicationReport& report, const std::string& name,
                const std::vector<double>& values) {
  MetricSummary m;
  m.per_replication = values;
  const double r = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / r;
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.std_error = values.size() > 1 ? std::sqrt(sq / (r - 1.0) / r) : 0.0;
  m.ci_low = m.mean - 1.96 * m.std_error;
  m.ci_high = m.mean + 1.96 * m.std_error;
  report.metrics[name] = std::move(m);
}

}  // namespace

ReplicationReport replicate(const SimConfig& config) {
  if (config.replications < 2) {
    throw std::invalid_argument("replicate: needs replications >= 2");
  }
  const int reps = config.replications;
  std::vector<std::future<SimStats>> futures;
  futures.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    SimConfig rep = config;
    rep.replications = 1;
    rep.seed = config.seed + static_cast<std::uint64_t>(i);
    rep.keep_samples = false;
    futures.push_back(
        std::async(std::launch::async, [rep] { return run_simulation(rep); }));
  }
  std::vector<SimStats> runs;
  runs.reserve(static_cast<std::size_t>(reps));
  for (auto& f : futures) runs.push_back(f.get());

  ReplicationReport report;
  report.replications = reps;
  report.base_seed = config.seed;
  const bool continuous = config.engine == Engine::continuous;
  std::vector<double> v(static_cast<std::size_t>(reps));
  const auto collect = [&](const std::string& name, auto getter) {
    for (int i = 0; i < reps; ++i) {
      v[static_cast<std::size_t>(i)] = getter(runs[static_cast<std::size_t>(i)]);
    }
    add_metric(report, name, v);
  };
  collect("mean_queue_departure",
          [](const SimStats& s) { return s.mean_queue_departure(); });
  collect("p0_departure", [](const SimStats& s) { return s.p0_departure(); });
  collect("mean_service_blocks",
          [](const SimStats& s) { return s.mean_service_blocks(); });
  if (continuous) {
    collect("mean_delay", [](const SimStats& s) { return s.mean_delay(); });
    collect("mean_vestige", [](const SimStats& s) { return s.mean_vestige(); });
    collect("mean_queue_boundary",
            [](const SimStats& s) { return s.mean_queue_boundary(); });
  }
  for (const SimStats& s : runs) {
    report.merged_departure.merge(s.queue_length_departure);
    report.merged_boundary.merge(s.queue_length_boundary);
    report.merged_service.merge(s.service_time_blocks);
    report.packets_departed += s.packets_departed;
  }
  return report;
}

namespace {

using nlohmann::json;

json histogram_pairs(const Histogram& h) {
  json out = json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] != 0) {
      out.push_back(json::array({i, h.counts[i]}));
    }
  }
  return out;
}

void put_if_finite(json& obj, const char* key, double v) {
  if (std::isfinite(v)) obj[key] = v;
}

json metadata_block(const SimStats& st, const std::string& manifest_name) {
  json meta;
  meta["manifest"] = manifest_name;
  meta["engine"] = st.engine == Engine::continuous ? "continuous" : "discrete";
  meta["capacity_mode"] =
      st.capacity_mode == CapacityMode::low_snr ? "low_snr" : "exact";
  meta["theta"] = st.theta;
  meta["nu"] = st.nu;
  meta["packet_size_lp"] = st.packet_size_Lp;
  meta["snr_rho"] = st.snr_rho;
  meta["num_blocks"] = st.num_blocks;
  meta["warmup_blocks"] = st.warmup_blocks;
  meta["seed"] = st.seed;
  meta["unstable"] = st.unstable;
  meta["histogram_overflow_flagged"] = st.histogram_overflow_flagged;
  return meta;
}

}  // namespace

std::string stats_to_json(const SimStats& st, const std::string& manifest_name) {
  json root;
  root["metadata"] = metadata_block(st, manifest_name);
  json metrics;
  metrics["packets_departed"] = st.packets_departed;
  metrics["arrivals_counted"] = st.arrivals_counted;
  metrics["idle_blocks"] = st.idle_blocks;
  metrics["total_nats_offered"] = st.total_nats_offered;
  metrics["total_nats_served"] = st.total_nats_served;
  metrics["final_buffer_nats"] = st.final_buffer_nats;
  put_if_finite(metrics, "mean_delay", st.mean_delay());
  put_if_finite(metrics, "std_error_delay", st.delay_std_error());
  put_if_finite(metrics, "mean_vestige", st.mean_vestige());
  put_if_finite(metrics, "std_error_vestige", st.vestige_std_error());
  put_if_finite(metrics, "mean_queue_departure", st.mean_queue_departure());
  put_if_finite(metrics, "mean_queue_boundary", st.mean_queue_boundary());
  put_if_finite(metrics, "p0_departure", st.p0_departure());
  put_if_finite(metrics, "p0_boundary", st.p0_boundary());
  put_if_finite(metrics, "mean_service_blocks", st.mean_service_blocks());
  root["metrics"] = metrics;
  json hists;
  hists["queue_length_departure"] = histogram_pairs(st.queue_length_departure);
  if (st.engine == Engine::continuous) {
    hists["queue_length_boundary"] = histogram_pairs(st.queue_length_boundary);
  }
  hists["service_time_blocks"] = histogram_pairs(st.service_time_blocks);
  root["histograms"] = hists;
  return root.dump(2) + "\n";
}

std::string report_to_json(const ReplicationReport& report, const SimConfig& config,
                           const std::string& manifest_name) {
  SimStats exemplar = init_stats(config);
  exemplar.histogram_overflow_flagged =
      exemplar.theta <= 0.8 && report.merged_departure.overflow_mass() > 1e-6;
  json root;
  root["metadata"] = metadata_block(exemplar, manifest_name);
  root["metadata"]["replications"] = report.replications;
  root["metadata"]["base_seed"] = report.base_seed;
  json metrics;
  for (const auto& [name, m] : report.metrics) {
    json jm;
    jm["mean"] = m.mean;
    jm["std_error"] = m.std_error;
    jm["ci95"] = json::array({m.ci_low, m.ci_high});
    jm["per_replication"] = m.per_replication;
    metrics[name] = jm;
  }
  root["metrics"] = metrics;
  root["packets_departed"] = report.packets_departed;
  json hists;
  hists["queue_length_departure"] = histogram_pairs(report.merged_departure);
  if (exemplar.engine == Engine::continuous) {
    hists["queue_length_boundary"] = histogram_pairs(report.merged_boundary);
  }
  hists["service_time_blocks"] = histogram_pairs(report.merged_service);
  root["histograms"] = hists;
  return root.dump(2) + "\n";
}

}  // namespace fadq
