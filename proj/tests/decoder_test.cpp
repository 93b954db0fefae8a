#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "sigra/codebook.hpp"
#include "sigra/decoder.hpp"

namespace sigra {
namespace {

Signature make(FrameShape shape, std::initializer_list<std::pair<std::size_t, std::size_t>> cells) {
  Signature s(shape);
  for (auto [r, p] : cells) s.activate(r, p);
  return s;
}

Codebook book(std::size_t weight, const std::vector<Signature>& sigs) {
  std::vector<CodebookEntry> entries;
  for (std::size_t i = 0; i < sigs.size(); ++i) entries.push_back({{i, ""}, sigs[i]});
  const auto shape = sigs.front().shape();
  return Codebook({shape.raos, shape.preambles, weight, MixerMode::raw}, std::move(entries));
}

ObservationFrame observe(const Codebook& cb, const std::vector<std::size_t>& tx) {
  std::vector<const Signature*> ptrs;
  for (auto i : tx) ptrs.push_back(&cb[i].signature);
  return ideal_superposition(cb.shape(), ptrs);
}

// sA = {1,2}, sB = {2,3}, sC = {1,3} on L=3, M=1 (1-based RAOs).
Codebook triangle() {
  const FrameShape s{3, 1};
  return book(2, {make(s, {{0, 0}, {1, 0}}), make(s, {{1, 0}, {2, 0}}), make(s, {{0, 0}, {2, 0}})});
}

TEST(DecodeFull, PhantomFromTwoOverlappingSignatures) {
  const auto cb = triangle();
  EXPECT_EQ(decode_full(observe(cb, {0, 1}), cb), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(DecodeFull, EmptyObservation) {
  const auto cb = triangle();
  EXPECT_TRUE(decode_full(observe(cb, {}), cb).empty());
}

TEST(DecodeFull, AllTransmitted) {
  const auto cb = triangle();
  EXPECT_EQ(decode_full(observe(cb, {0, 1, 2}), cb), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(DecodeFull, RejectsPartialOrMismatchedObservation) {
  const auto cb = triangle();
  EXPECT_THROW(decode_full(ObservationFrame({3, 1}, 2), cb), std::invalid_argument);
  EXPECT_THROW(decode_full(ObservationFrame({3, 2}, 3), cb), std::invalid_argument);
}

TEST(DecodeIterative, LoneSenderDecodedAtFirstRao) {
  const FrameShape s{3, 1};
  const auto cb = book(2, {make(s, {{0, 0}, {1, 0}}), make(s, {{1, 0}, {2, 0}})});
  const auto res = decode_iterative(observe(cb, {0}), cb);
  EXPECT_EQ(res.decoded, (std::vector<std::size_t>{0}));
  EXPECT_EQ(res.decoded_at, (std::vector<std::size_t>{1}));
  EXPECT_EQ(res.trace, (DecodeTrace{{1, 2, 1}, {2, 2, 1}, {3, 1, 1}}));
}

TEST(DecodeIterative, PhantomReportedAtFlush) {
  const auto cb = triangle();
  const auto res = decode_iterative(observe(cb, {0, 1}), cb);
  EXPECT_EQ(res.decoded, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(res.decoded_at, (std::vector<std::size_t>{3, 3, 3}));
  EXPECT_EQ(res.trace, (DecodeTrace{{1, 3, 0}, {2, 3, 0}, {3, 3, 3}}));
}

TEST(DecodeIterative, SilenceCollapsesViableSet) {
  const auto cb = triangle();
  const auto res = decode_iterative(observe(cb, {}), cb);
  EXPECT_TRUE(res.decoded.empty());
  EXPECT_EQ(res.trace, (DecodeTrace{{1, 1, 0}, {2, 0, 0}, {3, 0, 0}}));
}

// A false alarm that no candidate covers must not trigger a decode, while a
// false alarm on a cell covered by a single candidate does.
TEST(DecodeIterative, UncoveredFalseAlarmIgnored) {
  const FrameShape s{2, 2};
  const auto cb = book(1, {make(s, {{0, 0}}), make(s, {{1, 0}})});
  IterativeDecoder dec(cb);
  dec.receive(1, {false, true});
  EXPECT_EQ(dec.decoded_count(), 0u);
  EXPECT_EQ(dec.viable_count(), 1u);
  dec.receive(2, {true, false});
  EXPECT_EQ(dec.result().decoded, (std::vector<std::size_t>{1}));
}

TEST(IterativeDecoder, RejectsOutOfOrderAndExtraRaos) {
  const auto cb = triangle();
  IterativeDecoder dec(cb);
  EXPECT_THROW(dec.receive(2, {true}), std::invalid_argument);
  dec.receive(1, {true});
  EXPECT_THROW(dec.receive(1, {true}), std::invalid_argument);
  EXPECT_THROW(dec.receive(2, {true, false}), std::invalid_argument);
  dec.receive(2, {true});
  dec.receive(3, {true});
  EXPECT_TRUE(dec.finished());
  EXPECT_THROW(dec.receive(4, {true}), std::logic_error);
}

TEST(IterativeDecoder, DecodedEntriesAreRetained) {
  // sA = {1,2}. It is necessity-decoded at RAO 1, then RAO 2 is missed.
  const FrameShape s{2, 1};
  const auto cb = book(2, {make(s, {{0, 0}, {1, 0}})});
  IterativeDecoder dec(cb);
  dec.receive(1, {true});
  EXPECT_EQ(dec.decoded_at(0), 1u);
  dec.receive(2, {false});
  EXPECT_EQ(dec.decoded_at(0), 1u);
  EXPECT_TRUE(dec.viable(0));
}

TEST(TraceCsv, Layout) {
  std::ostringstream os;
  write_trace_csv(os, {{1, 3, 0}, {2, 1, 1}});
  EXPECT_EQ(os.str(), "rao,viable,decoded\n1,3,0\n2,1,1\n");
}

// Random codebooks under the ideal channel: the iterative decoder ends with the
// containment set, only transmitted signatures are decoded early, and the
// trace is monotone.
TEST(DecodeIterative, IdealChannelProperties) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 3000; ++trial) {
    std::uniform_int_distribution<std::size_t> ldist(2, 12), mdist(1, 6), tdist(1, 40);
    const std::size_t l = ldist(rng), m = mdist(rng);
    std::uniform_int_distribution<std::size_t> kdist(1, std::min(l, m));
    const SignatureParams params{l, m, kdist(rng), MixerMode::splitmix64};
    const auto cb = build_codebook(sequential_identities(tdist(rng)), params);
    std::bernoulli_distribution pick(0.3);
    std::vector<std::size_t> tx;
    std::set<std::size_t> txset;
    for (std::size_t i = 0; i < cb.size(); ++i)
      if (pick(rng)) {
        tx.push_back(i);
        txset.insert(i);
      }
    const auto y = observe(cb, tx);
    const auto res = decode_iterative(y, cb);
    ASSERT_EQ(res.decoded, decode_full(y, cb));
    for (std::size_t j = 0; j < res.decoded.size(); ++j)
      if (res.decoded_at[j] < l) ASSERT_TRUE(txset.count(res.decoded[j]));
    for (std::size_t r = 1; r < res.trace.size(); ++r) {
      ASSERT_LE(res.trace[r].viable, res.trace[r - 1].viable);
      ASSERT_GE(res.trace[r].decoded, res.trace[r - 1].decoded);
    }
    ASSERT_EQ(res.trace.size(), l);
  }
}

// With detection noise the full-frame set is always contained in the
// iterative one: a candidate contained in y is never pruned.
TEST(DecodeIterative, NoisyChannelKeepsContainedSignatures) {
  std::mt19937_64 rng(7);
  const ChannelParams channel(0.9, 0.05);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto cb = build_codebook(sequential_identities(30), {10, 4, 3, MixerMode::splitmix64});
    std::vector<const Signature*> ptrs;
    for (std::size_t i = trial % 3; i < cb.size(); i += 5) ptrs.push_back(&cb[i].signature);
    const auto y = superpose(cb.shape(), ptrs, channel, rng);
    const auto full = decode_full(y, cb);
    const auto iter = decode_iterative(y, cb).decoded;
    ASSERT_TRUE(std::includes(iter.begin(), iter.end(), full.begin(), full.end()));
  }
}

}  // namespace
}  // namespace sigra
