#pragma once

// Identity-derived signature construction and the counting formulas that go
// with it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sigra/ormac.hpp"

namespace sigra {

// u encodes IMSI plus connection establishment cause as one integer.
struct DeviceIdentity {
  std::uint64_t u = 0;
  std::string label;

  friend bool operator==(const DeviceIdentity& a, const DeviceIdentity& b) {
    return a.u == b.u;
  }
};

// Pre-hash applied to u before the modulus construction. `raw` feeds u
// straight into the moduli; `splitmix64` scrambles it first so consecutive
// identities do not produce correlated signatures.
enum class MixerMode { raw, splitmix64 };

inline std::string_view to_string(MixerMode m) {
  return m == MixerMode::raw ? "raw" : "splitmix64";
}

inline MixerMode parse_mixer_mode(std::string_view s) {
  if (s == "raw") return MixerMode::raw;
  if (s == "splitmix64") return MixerMode::splitmix64;
  throw std::invalid_argument("unknown mixer mode '" + std::string(s) + "'");
}

// Finalizer of SplitMix64 (Steele, Lea, Flood 2014), including the gamma step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t scramble(std::uint64_t u, MixerMode mode) {
  return mode == MixerMode::raw ? u : splitmix64(u);
}

struct SignatureParams {
  std::size_t raos = 0;       // L
  std::size_t preambles = 0;  // M
  std::size_t weight = 0;     // K
  MixerMode mixer = MixerMode::splitmix64;

  FrameShape shape() const { return {raos, preambles}; }

  void validate() const {
    if (raos == 0 || preambles == 0)
      throw std::invalid_argument("signature frame needs L >= 1 and M >= 1");
    if (weight < 1 || weight > std::min(raos, preambles)) {
      throw std::invalid_argument("signature weight K=" + std::to_string(weight) +
                                  " outside [1, min(M, L)] = [1, " +
                                  std::to_string(std::min(raos, preambles)) + "]");
    }
  }

  friend bool operator==(const SignatureParams&, const SignatureParams&) = default;
};

// Modulus construction with removal. Iteration j (1-based) picks position
// h mod (L+1-j) of the still-free RAO list and h mod (M+1-j) of the still-free
// preamble list, then removes both. Positions are 0-based: a modulus result of
// 0 selects the first remaining entry. This indexing fixes codebook
// compatibility, so do not change it.
inline Signature generate_signature(std::uint64_t u, const SignatureParams& params) {
  params.validate();
  const std::uint64_t h = scramble(u, params.mixer);

  std::vector<std::size_t> free_raos(params.raos);
  std::iota(free_raos.begin(), free_raos.end(), std::size_t{0});
  std::vector<std::size_t> free_preambles(params.preambles);
  std::iota(free_preambles.begin(), free_preambles.end(), std::size_t{0});

  Signature sig(params.shape());
  for (std::size_t j = 1; j <= params.weight; ++j) {
    const auto ri = static_cast<std::size_t>(h % (params.raos + 1 - j));
    const auto pi = static_cast<std::size_t>(h % (params.preambles + 1 - j));
    const std::size_t rao = free_raos[ri];
    const std::size_t preamble = free_preambles[pi];
    free_raos.erase(free_raos.begin() + static_cast<std::ptrdiff_t>(ri));
    free_preambles.erase(free_preambles.begin() + static_cast<std::ptrdiff_t>(pi));
    sig.activate(rao, preamble);
  }
  return sig;
}

inline Signature generate_signature(const DeviceIdentity& id, const SignatureParams& params) {
  return generate_signature(id.u, params);
}

// Reference random construction: every RAO active, preamble uniform per RAO.
template <std::uniform_random_bit_generator Rng>
Signature random_signature(FrameShape shape, Rng& rng) {
  if (shape.raos == 0 || shape.preambles == 0)
    throw std::invalid_argument("random signature needs L >= 1 and M >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, shape.preambles - 1);
  Signature sig(shape);
  for (std::size_t r = 0; r < shape.raos; ++r) sig.activate(r, pick(rng));
  return sig;
}

using BigCount = boost::multiprecision::cpp_int;

inline BigCount binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigCount c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c *= (n - k + i);
    c /= i;
  }
  return c;
}

// C(L, K) * M^K, exact.
inline BigCount signature_space_size(std::size_t raos, std::size_t preambles,
                                     std::size_t weight) {
  if (weight > raos) return 0;
  BigCount m_pow = boost::multiprecision::pow(BigCount(preambles),
                                              static_cast<unsigned>(weight));
  return binomial(raos, weight) * m_pow;
}

// Probability that two or more of T devices drawing uniformly from the
// signature space end up sharing one: sum_{i>=2} C(T,i) p^i (1-p)^(T-i).
inline double shared_signature_prob(std::size_t population, std::size_t raos,
                                    std::size_t preambles, std::size_t weight) {
  if (population < 2) throw std::invalid_argument("shared signature probability needs T >= 2");
  const BigCount space = signature_space_size(raos, preambles, weight);
  if (space == 0) throw std::invalid_argument("empty signature space");
  if (space == 1) return 1.0;

  // Terms are summed in log domain; for realistic spaces p is ~1e-25 and
  // 1 - (1-p)^T - T p (1-p)^(T-1) would cancel to zero.
  const long double log_p = -std::log(space.convert_to<long double>());
  const long double log_q = std::log1p(-std::exp(log_p));
  const auto n = static_cast<long double>(population);
  long double total = 0.0L;
  for (std::size_t i = 2; i <= population; ++i) {
    const auto k = static_cast<long double>(i);
    const long double log_term = std::lgamma(n + 1) - std::lgamma(k + 1) -
                                 std::lgamma(n - k + 1) + k * log_p + (n - k) * log_q;
    const long double term = std::exp(log_term);
    total += term;
    if (i > 2 && term < total * 1e-30L) break;
  }
  return static_cast<double>(total);
}

// Probability that K unconstrained uniform RAO draws hit fewer than K
// distinct RAOs: 1 - K! C(L,K) / L^K.
inline double distinct_rao_collision_prob(std::size_t raos, std::size_t weight) {
  if (weight > raos)
    throw std::invalid_argument("distinct RAO collision needs K <= L");
  long double all_distinct = 1.0L;
  for (std::size_t j = 0; j < weight; ++j)
    all_distinct *= static_cast<long double>(raos - j) / static_cast<long double>(raos);
  return static_cast<double>(1.0L - all_distinct);
}

}  // namespace sigra
