#pragma once

// Single-batch access reservation simulation for three contention schemes:
//
//  signature  identity-derived signatures, iterative decoding at the BS,
//             RRC Connection Setup per decoded signature, then data.
//  baseline   preamble / RAR / msg3 / msg4 / msg5 with a uniform initial
//             backoff, retries after the RAR timer, bounded attempts.
//  random     a fresh random signature per device with one preamble in every
//             RAO, decodable only once the whole frame has been received.
//
// All devices become active at t = 0. RAO k (0-based) ends at (k+1) periods.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sigra/codebook.hpp"
#include "sigra/decoder.hpp"
#include "sigra/dimensioning.hpp"
#include "sigra/ormac.hpp"
#include "sigra/signature_codec.hpp"

namespace sigra {

enum class Scheme { signature, baseline, random };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::signature: return "signature";
    case Scheme::baseline: return "baseline";
    case Scheme::random: return "random";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "signature") return Scheme::signature;
  if (s == "baseline") return Scheme::baseline;
  if (s == "random") return Scheme::random;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

// Downstream message timing. These stand in for the LTE channel model and
// only shift absolute latencies.
struct TimingConfig {
  double rar_window_ms = 5;
  double processing_delay_ms = 3;  // per message hop at the BS
  double grant_to_data_ms = 5;     // uplink grant to uplink transmission

  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

struct SimConfig {
  std::size_t population = 1000;  // T
  double arrivals = 200;          // N, mean batch size
  std::size_t preambles = 54;     // M
  double rao_period_ms = 1;
  Scheme scheme = Scheme::signature;
  double backoff_window_ms = 20;
  std::size_t max_attempts = 10;
  std::size_t payload_bytes = 100;
  ChannelParams channel{0.99, 1e-3};
  TimingConfig timing{};
  double target_goodput = 0.99;
  MixerMode mixer = MixerMode::splitmix64;
  std::size_t replications = 1;
  std::uint64_t seed = 0;

  double arrival_probability() const { return arrivals / static_cast<double>(population); }

  std::size_t backoff_raos() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(backoff_window_ms / rao_period_ms)));
  }
  std::size_t rar_window_raos() const {
    return static_cast<std::size_t>(std::ceil(timing.rar_window_ms / rao_period_ms - 1e-9));
  }

  void validate() const {
    if (population == 0) throw std::invalid_argument("population T must be positive");
    if (!(arrivals >= 0 && arrivals <= static_cast<double>(population)))
      throw std::invalid_argument("mean arrivals N must lie in [0, T]");
    if (preambles == 0) throw std::invalid_argument("preambles M must be positive");
    if (!(rao_period_ms > 0)) throw std::invalid_argument("rao_period_ms must be positive");
    if (!(backoff_window_ms > 0)) throw std::invalid_argument("backoff_window_ms must be positive");
    if (max_attempts == 0) throw std::invalid_argument("max_attempts must be positive");
    if (payload_bytes == 0) throw std::invalid_argument("payload_bytes must be positive");
    if (!(timing.rar_window_ms >= 0 && timing.processing_delay_ms >= 0 &&
          timing.grant_to_data_ms >= 0))
      throw std::invalid_argument("timing constants must be non-negative");
    if (replications == 0) throw std::invalid_argument("replications must be positive");
  }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Signature frame parameters for one sweep point.
struct FrameDimensions {
  std::size_t weight = 0;  // K
  std::size_t length = 0;  // L
};

inline FrameDimensions dimension_for(const SimConfig& cfg) {
  DimensioningInput in;
  in.arrivals = cfg.arrivals;
  in.population = cfg.population;
  in.preambles = cfg.preambles;
  in.target_goodput = cfg.target_goodput;
  in.channel = cfg.channel;
  const auto res = dimension(in);
  return {res.weight, res.length};
}

struct DeviceOutcome {
  std::size_t device = 0;  // population index
  bool served = false;
  double step1_ms = 0;
  double final_ms = 0;
  std::size_t attempts = 0;
};

// Everything a run produced before aggregation.
struct RunEvents {
  Scheme scheme = Scheme::signature;
  FrameDimensions dims{};
  std::vector<DeviceOutcome> outcomes;  // one per arrival, population order
  std::size_t step3_success = 0;  // resources that carried a genuine device
  std::size_t step3_wasted = 0;   // phantoms, collision groups, false alarms
  std::size_t false_positives = 0;
  DecodeTrace trace;
};

struct RunMetrics {
  Scheme scheme = Scheme::signature;
  FrameDimensions dims{};
  std::size_t arrivals = 0;
  std::size_t detected = 0;
  std::size_t false_positives = 0;
  std::size_t step3_slots = 0;
  std::size_t max_attempts_used = 0;
  std::optional<double> goodput;         // absent when no step-3 resources were used
  std::optional<double> detection_prob;  // absent when nobody arrived
  std::vector<double> step1_latency_ms;  // detected devices only
  std::vector<double> final_latency_ms;
  std::optional<double> mean_step1_ms;
  std::optional<double> mean_final_ms;
  DecodeTrace trace;
};

inline RunMetrics compute_metrics(const RunEvents& ev) {
  RunMetrics m;
  m.scheme = ev.scheme;
  m.dims = ev.dims;
  m.arrivals = ev.outcomes.size();
  m.false_positives = ev.false_positives;
  m.step3_slots = ev.step3_success + ev.step3_wasted;
  m.trace = ev.trace;
  for (const auto& o : ev.outcomes) {
    m.max_attempts_used = std::max(m.max_attempts_used, o.attempts);
    if (!o.served) continue;
    ++m.detected;
    m.step1_latency_ms.push_back(o.step1_ms);
    m.final_latency_ms.push_back(o.final_ms);
  }
  if (m.step3_slots > 0)
    m.goodput = static_cast<double>(ev.step3_success) / static_cast<double>(m.step3_slots);
  if (m.arrivals > 0)
    m.detection_prob = static_cast<double>(m.detected) / static_cast<double>(m.arrivals);
  auto mean = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  m.mean_step1_ms = mean(m.step1_latency_ms);
  m.mean_final_ms = mean(m.final_latency_ms);
  return m;
}

// Each device of the population becomes active independently with
// probability N/T. Returns population indices in ascending order.
template <std::uniform_random_bit_generator Rng>
std::vector<std::size_t> sample_arrivals(std::size_t population, double arrivals, Rng& rng) {
  if (!(arrivals >= 0 && arrivals <= static_cast<double>(population)))
    throw std::invalid_argument("sample_arrivals needs 0 <= N <= T");
  std::vector<std::size_t> out;
  if (arrivals == 0) return out;
  std::bernoulli_distribution active(arrivals / static_cast<double>(population));
  for (std::size_t i = 0; i < population; ++i)
    if (active(rng)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Signature scheme

template <std::uniform_random_bit_generator Rng>
RunEvents simulate_signature_frame(const SimConfig& cfg, const Codebook& codebook,
                                   const std::vector<std::size_t>& active, Rng& rng) {
  cfg.validate();
  if (codebook.size() != cfg.population || codebook.shape().preambles != cfg.preambles) {
    throw std::invalid_argument("codebook (" + std::to_string(codebook.size()) + " entries, M=" +
                                std::to_string(codebook.shape().preambles) +
                                ") does not match config (T=" + std::to_string(cfg.population) +
                                ", M=" + std::to_string(cfg.preambles) + ")");
  }
  RunEvents ev;
  ev.scheme = Scheme::signature;
  ev.dims = {codebook.params().weight, codebook.params().raos};

  std::vector<const Signature*> sent;
  sent.reserve(active.size());
  for (auto i : active) sent.push_back(&codebook.entries().at(i).signature);
  const ObservationFrame y = superpose(codebook.shape(), sent, cfg.channel, rng);
  const auto res = decode_iterative(y, codebook);
  ev.trace = res.trace;

  std::vector<bool> is_active(codebook.size(), false);
  for (auto i : active) is_active[i] = true;
  std::vector<std::size_t> decoded_at(codebook.size(), 0);
  for (std::size_t j = 0; j < res.decoded.size(); ++j) {
    const auto idx = res.decoded[j];
    decoded_at[idx] = res.decoded_at[j];
    if (is_active[idx]) {
      ++ev.step3_success;
    } else {
      ++ev.step3_wasted;
      ++ev.false_positives;
    }
  }

  const double downstream = cfg.timing.processing_delay_ms + cfg.timing.grant_to_data_ms;
  for (auto i : active) {
    DeviceOutcome o;
    o.device = i;
    o.attempts = 1;
    if (decoded_at[i] != 0) {
      o.served = true;
      o.step1_ms = static_cast<double>(decoded_at[i]) * cfg.rao_period_ms;
      o.final_ms = o.step1_ms + downstream;
    }
    ev.outcomes.push_back(o);
  }
  return ev;
}

template <std::uniform_random_bit_generator Rng>
RunMetrics run_signature_arp(const SimConfig& cfg, const Codebook& codebook, Rng& rng) {
  const auto active = sample_arrivals(cfg.population, cfg.arrivals, rng);
  return compute_metrics(simulate_signature_frame(cfg, codebook, active, rng));
}

// ---------------------------------------------------------------------------
// Baseline scheme

template <std::uniform_random_bit_generator Rng>
RunEvents simulate_baseline(const SimConfig& cfg, const std::vector<std::size_t>& active,
                            Rng& rng) {
  cfg.validate();
  RunEvents ev;
  ev.scheme = Scheme::baseline;

  const std::size_t window = cfg.backoff_raos();
  const std::size_t rar_wait = cfg.rar_window_raos();
  const double p = cfg.timing.processing_delay_ms;
  const double g = cfg.timing.grant_to_data_ms;

  ev.outcomes.resize(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) ev.outcomes[k].device = active[k];

  // Event calendar: RAO index -> devices (positions in `active`) transmitting.
  std::map<std::size_t, std::vector<std::size_t>> calendar;
  std::uniform_int_distribution<std::size_t> pick_rao(0, window - 1);
  std::uniform_int_distribution<std::size_t> pick_preamble(0, cfg.preambles - 1);
  std::bernoulli_distribution detect(cfg.channel.p_detect());
  std::bernoulli_distribution alarm(cfg.channel.p_false_alarm());

  for (std::size_t k = 0; k < active.size(); ++k) calendar[pick_rao(rng)].push_back(k);

  std::vector<std::vector<std::size_t>> by_preamble(cfg.preambles);
  for (std::size_t t = 0; !calendar.empty(); ++t) {
    for (auto& v : by_preamble) v.clear();
    if (auto it = calendar.find(t); it != calendar.end()) {
      for (auto k : it->second) {
        ++ev.outcomes[k].attempts;
        by_preamble[pick_preamble(rng)].push_back(k);
      }
      calendar.erase(it);
    }

    const double rao_end = static_cast<double>(t + 1) * cfg.rao_period_ms;
    for (std::size_t pre = 0; pre < cfg.preambles; ++pre) {
      const auto& tx = by_preamble[pre];
      if (tx.empty()) {
        // A falsely detected preamble still gets a RAR and a msg3 grant.
        if (alarm(rng)) ++ev.step3_wasted;
        continue;
      }
      const bool detected = detect(rng);
      if (detected && tx.size() == 1) {
        auto& o = ev.outcomes[tx.front()];
        o.served = true;
        o.step1_ms = rao_end;
        o.final_ms = rao_end + 2 * p + 2 * g;
        ++ev.step3_success;
        continue;
      }
      if (detected) ++ev.step3_wasted;  // one msg3 resource per collision group
      for (auto k : tx) {
        if (ev.outcomes[k].attempts >= cfg.max_attempts) continue;  // outage
        calendar[t + 1 + rar_wait + pick_rao(rng)].push_back(k);
      }
    }
  }
  return ev;
}

template <std::uniform_random_bit_generator Rng>
RunMetrics run_baseline_arp(const SimConfig& cfg, Rng& rng) {
  const auto active = sample_arrivals(cfg.population, cfg.arrivals, rng);
  return compute_metrics(simulate_baseline(cfg, active, rng));
}

// ---------------------------------------------------------------------------
// Random signature scheme

// Every population member realizes a random signature for the frame; active
// devices transmit theirs and the BS tests all T realizations against the
// full observation. A contained signature is credited to a device only when
// no other transmitter sent an identical one.
template <std::uniform_random_bit_generator Rng>
RunEvents simulate_random_frame(const SimConfig& cfg, std::size_t length,
                                const std::vector<std::size_t>& active, Rng& rng) {
  cfg.validate();
  if (length == 0) throw std::invalid_argument("random scheme needs L >= 1");
  RunEvents ev;
  ev.scheme = Scheme::random;
  ev.dims = {length, length};
  const FrameShape shape{length, cfg.preambles};

  std::vector<Signature> realized;
  realized.reserve(cfg.population);
  for (std::size_t i = 0; i < cfg.population; ++i) realized.push_back(random_signature(shape, rng));

  std::vector<const Signature*> sent;
  for (auto i : active) sent.push_back(&realized[i]);
  const ObservationFrame y = superpose(shape, sent, cfg.channel, rng);

  std::map<Signature, std::size_t> multiplicity;
  for (const auto* s : sent) ++multiplicity[*s];

  std::vector<bool> is_active(cfg.population, false);
  for (auto i : active) is_active[i] = true;
  std::vector<bool> credited(cfg.population, false);
  for (std::size_t i = 0; i < cfg.population; ++i) {
    if (!contains(realized[i], y)) continue;
    if (is_active[i] && multiplicity[realized[i]] == 1) {
      credited[i] = true;
      ++ev.step3_success;
    } else {
      ++ev.step3_wasted;
      if (!is_active[i]) ++ev.false_positives;
    }
  }

  const double step1 = static_cast<double>(length) * cfg.rao_period_ms;
  const double downstream = cfg.timing.processing_delay_ms + cfg.timing.grant_to_data_ms;
  for (auto i : active) {
    DeviceOutcome o;
    o.device = i;
    o.attempts = 1;
    if (credited[i]) {
      o.served = true;
      o.step1_ms = step1;
      o.final_ms = step1 + downstream;
    }
    ev.outcomes.push_back(o);
  }
  return ev;
}

template <std::uniform_random_bit_generator Rng>
RunMetrics run_random_arp(const SimConfig& cfg, std::size_t length, Rng& rng) {
  const auto active = sample_arrivals(cfg.population, cfg.arrivals, rng);
  return compute_metrics(simulate_random_frame(cfg, length, active, rng));
}

// ---------------------------------------------------------------------------
// Replications

// Seed of replication `rep` under master seed `master`.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep) {
  return splitmix64(master ^ splitmix64(rep));
}

// Independent stream `stream` of a replication.
inline std::mt19937_64 make_stream(std::uint64_t rep_seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(rep_seed), static_cast<std::uint32_t>(rep_seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

// Pre-built per-sweep-point state shared by all replications.
struct SweepPoint {
  SimConfig config;
  FrameDimensions dims{};
  Codebook codebook;  // signature scheme only
};

inline SweepPoint prepare_sweep_point(const SimConfig& cfg) {
  cfg.validate();
  SweepPoint sp;
  sp.config = cfg;
  if (cfg.scheme == Scheme::baseline) return sp;
  sp.dims = dimension_for(cfg);
  if (cfg.scheme == Scheme::signature) {
    SignatureParams params{sp.dims.length, cfg.preambles, sp.dims.weight, cfg.mixer};
    sp.codebook = build_codebook(sequential_identities(cfg.population), params);
  }
  return sp;
}

// One replication. Arrivals come from stream 0 so every scheme sees the same
// batch for a given (seed, rep); channel and protocol draws use stream 1.
inline RunMetrics run_replication(const SweepPoint& sp, std::uint64_t rep_seed) {
  const auto& cfg = sp.config;
  auto arrivals_rng = make_stream(rep_seed, 0);
  auto rng = make_stream(rep_seed, 1);
  const auto active = sample_arrivals(cfg.population, cfg.arrivals, arrivals_rng);
  switch (cfg.scheme) {
    case Scheme::signature:
      return compute_metrics(simulate_signature_frame(cfg, sp.codebook, active, rng));
    case Scheme::baseline:
      return compute_metrics(simulate_baseline(cfg, active, rng));
    case Scheme::random:
      return compute_metrics(simulate_random_frame(cfg, sp.dims.length, active, rng));
  }
  throw std::logic_error("unhandled scheme");
}

}  // namespace sigra
