#pragma once

// Analytical sizing of the signature frame: from the expected number of
// simultaneous arrivals and a goodput target to the weight K and length L.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigra/ormac.hpp"

namespace sigra {

// The requested (K, false-positive target) cannot be met by any finite L.
class InfeasibleTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-point iteration for L failed to settle.
class DimensioningDiverged : public std::runtime_error {
 public:
  DimensioningDiverged(const std::string& what, std::vector<std::size_t> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<std::size_t>& trace() const { return trace_; }

 private:
  std::vector<std::size_t> trace_;
};

// Per-signature false positive probability that yields goodput G_hat when N of
// T devices are active: N (1 - G) / ((T - N) G).
inline double target_false_positive(double arrivals, double population, double goodput) {
  if (!(arrivals > 0 && arrivals < population))
    throw std::invalid_argument("target false positive needs 0 < N < T");
  if (!(goodput > 0 && goodput <= 1))
    throw std::invalid_argument("target goodput must lie in (0, 1]");
  return arrivals * (1.0 - goodput) / ((population - arrivals) * goodput);
}

// Probability that a given (RAO, preamble) cell is used by none of N active
// signatures of weight K in an L x M frame.
inline double idle_probability(double weight, double raos, double preambles, double arrivals) {
  const double cells = raos * preambles;
  if (!(weight >= 0 && weight <= cells))
    throw std::invalid_argument("idle probability needs 0 <= K <= L*M");
  if (arrivals == 0) return 1.0;
  if (weight == cells) return 0.0;
  return std::exp(arrivals * std::log1p(-weight / cells));
}

// Probability that an inactive signature is fully covered by the observation:
// [p_d + (p_f - p_d) p_idle]^K.
inline double false_positive_probability(double weight, double raos, double preambles,
                                         double arrivals, const ChannelParams& channel) {
  const double idle = idle_probability(weight, raos, preambles, arrivals);
  const double per_cell =
      channel.p_detect() + (channel.p_false_alarm() - channel.p_detect()) * idle;
  if (weight == 0) return 1.0;
  if (per_cell <= 0) return 0.0;
  return std::exp(weight * std::log(per_cell));
}

// Real-valued weight minimizing the ideal-channel false positive rate, capped
// at one activation per RAO: L min(1, (M/N) ln 2).
inline double k_min(double raos, double preambles, double arrivals) {
  if (raos < 1 || preambles < 1 || arrivals < 1)
    throw std::invalid_argument("k_min needs L, M, N >= 1");
  return raos * std::min(1.0, preambles / arrivals * std::numbers::ln2);
}

// Real-valued frame length achieving false positive target p_fa at weight K.
// Requires p_f < p_fa^(1/K) < p_d.
inline double required_length(double weight, double preambles, double arrivals,
                              double p_fa_target, const ChannelParams& channel) {
  if (!(weight >= 1 && preambles >= 1 && arrivals >= 1))
    throw std::invalid_argument("required length needs K, M, N >= 1");
  const double pd = channel.p_detect();
  const double pf = channel.p_false_alarm();
  const double per_cell = std::pow(p_fa_target, 1.0 / weight);
  if (!(per_cell > pf && per_cell < pd)) {
    throw InfeasibleTarget("false positive target " + std::to_string(p_fa_target) +
                           " at K=" + std::to_string(static_cast<long>(weight)) +
                           " needs p_f < p_fa^(1/K) < p_d, got p_fa^(1/K)=" +
                           std::to_string(per_cell));
  }
  const double ratio = (per_cell - pd) / (pf - pd);  // in (0, 1)
  // 1 - ratio^(1/N) via expm1 keeps precision when the root is close to 1.
  const double denom = -std::expm1(std::log(ratio) / arrivals);
  return weight / preambles / denom;
}

// Expected goodput N / (N + p_fa (T - N)).
inline double analytic_goodput(double arrivals, double population, double p_fa) {
  if (!(arrivals >= 0 && arrivals <= population))
    throw std::invalid_argument("analytic goodput needs 0 <= N <= T");
  const double denom = arrivals + p_fa * (population - arrivals);
  if (denom == 0) return 1.0;
  return arrivals / denom;
}

// Mean number of false positives p_fa (T - N).
inline double expected_false_positives(double arrivals, double population, double p_fa) {
  return p_fa * (population - arrivals);
}

struct DimensioningInput {
  double arrivals = 0;      // N, mean of the binomial batch size
  std::size_t population = 0;  // T
  std::size_t preambles = 54;  // M
  double target_goodput = 0.99;
  ChannelParams channel{0.99, 1e-3};

  void validate() const {
    if (!(arrivals > 0 && arrivals <= static_cast<double>(population)))
      throw std::invalid_argument("dimensioning needs 0 < N <= T");
    if (preambles < 1) throw std::invalid_argument("dimensioning needs M >= 1");
    if (!(arrivals > static_cast<double>(preambles) * std::numbers::ln2)) {
      throw std::invalid_argument("dimensioning assumes N > M ln 2 (N=" +
                                  std::to_string(arrivals) +
                                  ", M=" + std::to_string(preambles) + ")");
    }
    if (!(channel.p_detect() >= 0.99 && channel.p_false_alarm() <= 1e-3)) {
      throw std::invalid_argument(
          "fixed-point dimensioning is only defined for p_d >= 0.99 and p_f <= 1e-3");
    }
  }
};

struct DimensioningResult {
  std::size_t weight = 0;  // K
  std::size_t length = 0;  // L
  double p_fa_target = 0;
  double p_fa_predicted = 0;
  double goodput_predicted = 0;
  std::size_t iterations = 0;
  std::vector<std::size_t> length_trace;  // L_0, L_1, ...
};

inline constexpr std::size_t kDimensioningIterationCap = 100;

// Integer weight used for a frame of length L: ceil of the capped k_min.
inline std::size_t weight_for_length(std::size_t raos, std::size_t preambles, double arrivals) {
  const double k = k_min(static_cast<double>(raos), static_cast<double>(preambles), arrivals);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k - 1e-12)));
}

// Solves L = ceil(required_length(ceil(k_min(L)), ...)) by plain iteration from
// the ideal-channel Bloom filter length. Cycles and the iteration cap raise
// DimensioningDiverged carrying the visited lengths.
inline DimensioningResult dimension(const DimensioningInput& in) {
  in.validate();
  const double n = in.arrivals;
  const double t = static_cast<double>(in.population);
  const double m = static_cast<double>(in.preambles);

  DimensioningResult res;
  res.p_fa_target = target_false_positive(n, t, in.target_goodput);
  if (!(res.p_fa_target > 0)) {
    throw InfeasibleTarget("goodput target " + std::to_string(in.target_goodput) +
                           " requires zero false positives");
  }

  const double ln2 = std::numbers::ln2;
  const double start = n * std::log(1.0 / res.p_fa_target) / (m * ln2 * ln2);
  std::size_t length = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(start)));
  res.length_trace.push_back(length);

  for (std::size_t it = 1; it <= kDimensioningIterationCap; ++it) {
    const std::size_t k = weight_for_length(length, in.preambles, n);
    const double real_len = required_length(static_cast<double>(k), m, n, res.p_fa_target,
                                            in.channel);
    if (!std::isfinite(real_len) || real_len > 1e9) {
      throw InfeasibleTarget("required frame length diverges at K=" + std::to_string(k));
    }
    const auto next = static_cast<std::size_t>(std::ceil(real_len - 1e-9));
    res.iterations = it;
    if (next == length) {
      res.weight = k;
      res.length = length;
      if (res.weight > std::min(in.preambles, res.length)) {
        throw InfeasibleTarget("dimensioned weight K=" + std::to_string(res.weight) +
                               " exceeds min(M, L)");
      }
      res.p_fa_predicted = false_positive_probability(static_cast<double>(res.weight),
                                                      static_cast<double>(res.length), m, n,
                                                      in.channel);
      res.goodput_predicted = analytic_goodput(n, t, res.p_fa_predicted);
      return res;
    }
    if (std::find(res.length_trace.begin(), res.length_trace.end(), next) !=
        res.length_trace.end()) {
      res.length_trace.push_back(next);
      throw DimensioningDiverged("frame length iteration entered a cycle", res.length_trace);
    }
    res.length_trace.push_back(next);
    length = next;
  }
  throw DimensioningDiverged("frame length iteration did not settle within " +
                                 std::to_string(kDimensioningIterationCap) + " steps",
                             res.length_trace);
}

}  // namespace sigra
