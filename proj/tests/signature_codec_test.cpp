#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "sigra/codebook.hpp"
#include "sigra/signature_codec.hpp"

namespace sigra {
namespace {

std::vector<std::pair<std::size_t, std::size_t>> cells(const Signature& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < s.shape().raos; ++r)
    if (auto p = s.preamble_at(r)) out.emplace_back(r, *p);
  return out;
}

using Cells = std::vector<std::pair<std::size_t, std::size_t>>;

TEST(GenerateSignature, HandTraceUZero) {
  const auto s = generate_signature(0, {3, 2, 2, MixerMode::raw});
  EXPECT_EQ(cells(s), (Cells{{0, 0}, {1, 1}}));
}

TEST(GenerateSignature, HandTraceUFive) {
  const auto s = generate_signature(5, {3, 2, 2, MixerMode::raw});
  // (RAO 3, P2) then (RAO 2, P1), 0-based rows listed in row order.
  EXPECT_EQ(cells(s), (Cells{{1, 0}, {2, 1}}));
}

TEST(GenerateSignature, FullWeightIsPermutation) {
  for (std::uint64_t u : {0ull, 1ull, 17ull, 123456789ull}) {
    for (auto mode : {MixerMode::raw, MixerMode::splitmix64}) {
      const auto s = generate_signature(u, {5, 5, 5, mode});
      std::set<std::size_t> pre;
      for (std::size_t r = 0; r < 5; ++r) {
        ASSERT_TRUE(s.preamble_at(r).has_value());
        pre.insert(*s.preamble_at(r));
      }
      EXPECT_EQ(pre.size(), 5u);
    }
  }
}

TEST(GenerateSignature, RejectsOverweight) {
  EXPECT_THROW(generate_signature(1, {3, 2, 3, MixerMode::raw}), std::invalid_argument);
  EXPECT_THROW(generate_signature(1, {2, 5, 3, MixerMode::raw}), std::invalid_argument);
  EXPECT_THROW(generate_signature(1, {4, 4, 0, MixerMode::raw}), std::invalid_argument);
}

// Determinism, exact weight and distinct preambles over random parameters.
TEST(GenerateSignature, WeightAndDistinctnessProperties) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim(1, 60);
  std::uniform_int_distribution<std::uint64_t> ident;
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t l = dim(rng), m = dim(rng);
    std::uniform_int_distribution<std::size_t> kdist(1, std::min(l, m));
    const SignatureParams params{l, m, kdist(rng),
                                 trial % 2 ? MixerMode::raw : MixerMode::splitmix64};
    const auto u = ident(rng);
    const auto s = generate_signature(u, params);
    ASSERT_EQ(s, generate_signature(u, params));
    ASSERT_EQ(s.weight(), params.weight);
    std::set<std::size_t> pre;
    for (const auto& [r, p] : cells(s)) pre.insert(p);
    ASSERT_EQ(pre.size(), params.weight);
  }
}

TEST(GenerateSignature, SmallSpaceIsCovered) {
  for (auto mode : {MixerMode::raw, MixerMode::splitmix64}) {
    std::set<Signature> seen;
    // The draws depend on h mod 6 only. By hand, h = 2 and h = 3 both give
    // {(0,1), (2,0)}, so 5 of the 6 signatures are reachable.
    for (std::uint64_t u = 0; u <= 10000; ++u) seen.insert(generate_signature(u, {3, 2, 2, mode}));
    EXPECT_EQ(seen.size(), 5u) << to_string(mode);
    EXPECT_EQ(generate_signature(2, {3, 2, 2, MixerMode::raw}),
              generate_signature(3, {3, 2, 2, MixerMode::raw}));
  }
}

TEST(SignatureSpace, Counts) {
  // Enumerate 2-subsets of 3 RAOs times 3^2 preamble choices.
  std::size_t enumerated = 0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b)
      for (std::size_t pa = 0; pa < 3; ++pa)
        for (std::size_t pb = 0; pb < 3; ++pb) ++enumerated;
  EXPECT_EQ(signature_space_size(3, 3, 2), enumerated);
  EXPECT_EQ(enumerated, 27u);
  EXPECT_EQ(signature_space_size(10, 7, 0), 1);
  // C(47,9) * 54^9, evaluated independently with arbitrary precision.
  EXPECT_EQ(signature_space_size(47, 54, 9), BigCount("5320199113232223173690880"));
  EXPECT_GT(signature_space_size(47, 54, 9), BigCount("1000000000000000000000000"));
}

TEST(SharedSignature, Formula) {
  EXPECT_NEAR(shared_signature_prob(2, 3, 3, 2), 1.0 / 729.0, 1e-15);
  EXPECT_DOUBLE_EQ(shared_signature_prob(2, 5, 5, 0), 1.0);
  const double tiny = shared_signature_prob(1000, 47, 54, 9);
  EXPECT_LT(tiny, 1e-18);
  EXPECT_GT(tiny, 0.0);
  // High-precision reference: 1.7647358959911787e-44.
  EXPECT_NEAR(tiny / 1.7647358959911787e-44, 1.0, 1e-9);
  EXPECT_THROW(shared_signature_prob(1, 3, 3, 2), std::invalid_argument);
}

// The formula is the probability that a given signature is picked by two or
// more of T uniform draws.
TEST(SharedSignature, MonteCarlo) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> draw(0, 26);
  const int trials = 1'000'000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) hits += (draw(rng) == 0 && draw(rng) == 0);
  const double p = shared_signature_prob(2, 3, 3, 2);
  EXPECT_NEAR(static_cast<double>(hits) / trials, p, 4 * std::sqrt(p * (1 - p) / trials));
}

TEST(DistinctRaoCollision, Values) {
  int collide = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) collide += a == b;
  EXPECT_DOUBLE_EQ(distinct_rao_collision_prob(4, 2), collide / 16.0);
  EXPECT_DOUBLE_EQ(distinct_rao_collision_prob(47, 1), 0.0);
  // 1 - 47!/(38! 47^9) to 50 digits: 0.558158647609094914...
  EXPECT_NEAR(distinct_rao_collision_prob(47, 9), 0.55815864760909491, 1e-14);
  EXPECT_THROW(distinct_rao_collision_prob(3, 4), std::invalid_argument);
}

TEST(RandomSignature, SingleCell) {
  std::mt19937_64 rng(1);
  const auto s = random_signature({1, 1}, rng);
  EXPECT_EQ(cells(s), (Cells{{0, 0}}));
}

TEST(RandomSignature, SeededGolden) {
  std::mt19937_64 rng(42);
  const auto s = random_signature({3, 3}, rng);
  EXPECT_EQ(s.weight(), 3u);
  EXPECT_EQ(cells(s), (Cells{{0, 2}, {1, 1}, {2, 2}}));
}

TEST(RandomSignature, PreambleChoiceIsUniform) {
  const std::size_t m = 8;
  std::mt19937_64 rng(11);
  std::vector<double> counts(m, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[*random_signature({1, m}, rng).preamble_at(0)] += 1;
  double chi2 = 0;
  const double expect = static_cast<double>(draws) / m;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  boost::math::chi_squared dist(static_cast<double>(m - 1));
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.999));
}

TEST(Codebook, SizeAndDuplicates) {
  const auto small = build_codebook(sequential_identities(2), {10, 5, 3, MixerMode::splitmix64});
  EXPECT_EQ(small.size(), 2u);

  const auto cb = build_codebook(sequential_identities(1000), {47, 54, 9, MixerMode::splitmix64});
  ASSERT_EQ(cb.size(), 1000u);
  std::size_t dup = 0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      bool same = true;
      for (std::size_t r = 0; r < 47 && same; ++r) same = cb.slot(i, r) == cb.slot(j, r);
      if (same) {
        ++dup;
        break;
      }
    }
  }
  EXPECT_EQ(dup, 0u);
  EXPECT_EQ(cb.duplicate_signatures(), dup);
}

TEST(Codebook, ReportsCollidingPair) {
  const SignatureParams params{3, 2, 2, MixerMode::raw};
  const auto target = generate_signature(0, params);
  std::uint64_t partner = 1;
  while (!(generate_signature(partner, params) == target)) ++partner;
  const auto cb = build_codebook({{0, "a"}, {partner, "b"}}, params);
  EXPECT_EQ(cb.duplicate_signatures(), 1u);
}

TEST(Codebook, DuplicateIdentityRejected) {
  EXPECT_THROW(build_codebook({{7, "a"}, {7, "b"}}, {4, 4, 2, MixerMode::raw}),
               std::invalid_argument);
}

TEST(CodebookText, RoundTripIsBitExact) {
  for (auto mode : {MixerMode::raw, MixerMode::splitmix64}) {
    const auto cb = build_codebook(sequential_identities(300), {13, 7, 4, mode});
    std::ostringstream first;
    write_codebook(first, cb);
    std::istringstream in(first.str());
    const auto back = read_codebook(in);
    std::ostringstream second;
    write_codebook(second, back);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_EQ(back.params(), cb.params());
    for (std::size_t i = 0; i < cb.size(); ++i) EXPECT_EQ(back[i].signature, cb[i].signature);
  }
}

TEST(CodebookText, FormatLayout) {
  // u=5 on a 3x2 frame, K=2 raw: rows 1 and 2 active at P1 and P2 -> bits
  // 0b00 10 01 -> byte 0b00100100 = 0x24.
  const auto cb = build_codebook({{5, ""}}, {3, 2, 2, MixerMode::raw});
  std::ostringstream os;
  write_codebook(os, cb);
  EXPECT_EQ(os.str(), "3 2 2 raw\n5 24\n");
}

TEST(CodebookText, RejectsCorruptInput) {
  std::istringstream bad_hex("3 2 2 raw\n5 2g\n");
  EXPECT_THROW(read_codebook(bad_hex), std::invalid_argument);
  std::istringstream wrong_bits("3 2 2 raw\n5 28\n");
  EXPECT_THROW(read_codebook(wrong_bits), std::invalid_argument);
  std::istringstream bad_header("3 2 raw\n");
  EXPECT_THROW(read_codebook(bad_header), std::invalid_argument);
}

}  // namespace
}  // namespace sigra
