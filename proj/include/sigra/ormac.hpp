#pragma once

// Preamble grids over an OR multiple-access channel.
//
// A signature frame is L random access opportunities (RAOs), each offering M
// orthogonal preambles. A device activates at most one preamble per RAO; the
// base station only learns which (RAO, preamble) cells are active, i.e. the
// bit-wise OR of everything transmitted, corrupted by missed detections and
// false alarms.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigra {

struct FrameShape {
  std::size_t raos = 0;
  std::size_t preambles = 0;

  std::size_t cells() const { return raos * preambles; }
  friend bool operator==(const FrameShape&, const FrameShape&) = default;
};

inline std::string to_string(const FrameShape& s) {
  return std::to_string(s.raos) + "x" + std::to_string(s.preambles);
}

// Activation pattern of one device: per RAO either no preamble or exactly one.
// Storing the pattern as one slot per row makes the one-preamble-per-RAO
// invariant structural.
class Signature {
 public:
  Signature() = default;

  explicit Signature(FrameShape shape)
      : shape_(shape), slots_(shape.raos, kIdle) {}

  // Rows are 0-based here; RAO r (1-based in traces and CSVs) is row r-1.
  void activate(std::size_t row, std::size_t preamble) {
    if (row >= shape_.raos || preamble >= shape_.preambles) {
      throw std::out_of_range("signature cell (" + std::to_string(row) + ", " +
                              std::to_string(preamble) + ") outside " +
                              to_string(shape_));
    }
    if (slots_[row] == kIdle) ++weight_;
    slots_[row] = static_cast<std::int32_t>(preamble);
  }

  std::optional<std::size_t> preamble_at(std::size_t row) const {
    const auto v = slots_.at(row);
    if (v == kIdle) return std::nullopt;
    return static_cast<std::size_t>(v);
  }

  bool active(std::size_t row, std::size_t preamble) const {
    return slots_.at(row) == static_cast<std::int32_t>(preamble);
  }

  // Raw slot view: -1 for an idle row, else the preamble index.
  std::span<const std::int32_t> slots() const { return slots_; }

  const FrameShape& shape() const { return shape_; }
  std::size_t weight() const { return weight_; }

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.shape_ == b.shape_ && a.slots_ == b.slots_;
  }
  friend bool operator<(const Signature& a, const Signature& b) {
    if (a.shape_.raos != b.shape_.raos) return a.shape_.raos < b.shape_.raos;
    if (a.shape_.preambles != b.shape_.preambles)
      return a.shape_.preambles < b.shape_.preambles;
    return a.slots_ < b.slots_;
  }

  static constexpr std::int32_t kIdle = -1;

 private:
  FrameShape shape_{};
  std::vector<std::int32_t> slots_;
  std::size_t weight_ = 0;
};

// What the base station sees: a dense L x M bit matrix, of which the first
// rao_count rows have been received.
class ObservationFrame {
 public:
  ObservationFrame() = default;

  explicit ObservationFrame(FrameShape shape, std::size_t rao_count = 0)
      : shape_(shape), bits_(shape.cells(), false), rao_count_(rao_count) {
    if (rao_count > shape.raos) {
      throw std::invalid_argument("rao_count exceeds frame length");
    }
  }

  bool at(std::size_t row, std::size_t preamble) const {
    return bits_.at(index(row, preamble));
  }
  void set(std::size_t row, std::size_t preamble, bool v = true) {
    bits_.at(index(row, preamble)) = v;
  }

  std::size_t rao_count() const { return rao_count_; }
  void set_rao_count(std::size_t n) {
    if (n > shape_.raos) throw std::invalid_argument("rao_count exceeds frame length");
    rao_count_ = n;
  }

  const FrameShape& shape() const { return shape_; }

  std::size_t active_cells() const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < rao_count_; ++r)
      for (std::size_t p = 0; p < shape_.preambles; ++p) n += at(r, p) ? 1 : 0;
    return n;
  }

  friend bool operator==(const ObservationFrame&, const ObservationFrame&) = default;

 private:
  std::size_t index(std::size_t row, std::size_t preamble) const {
    if (row >= shape_.raos || preamble >= shape_.preambles)
      throw std::out_of_range("observation cell outside " + to_string(shape_));
    return row * shape_.preambles + preamble;
  }

  FrameShape shape_{};
  std::vector<bool> bits_;
  std::size_t rao_count_ = 0;
};

// Per-cell detector quality at the base station.
class ChannelParams {
 public:
  // Ideal channel: every active preamble detected, no false alarms.
  ChannelParams() = default;

  ChannelParams(double p_detect, double p_false_alarm)
      : p_detect_(p_detect), p_false_alarm_(p_false_alarm) {
    if (!(p_false_alarm >= 0.0 && p_false_alarm < p_detect && p_detect <= 1.0)) {
      throw std::invalid_argument("channel requires 0 <= p_f < p_d <= 1, got p_d=" +
                                  std::to_string(p_detect) +
                                  " p_f=" + std::to_string(p_false_alarm));
    }
  }

  double p_detect() const { return p_detect_; }
  double p_false_alarm() const { return p_false_alarm_; }
  bool ideal() const { return p_detect_ == 1.0 && p_false_alarm_ == 0.0; }

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;

 private:
  double p_detect_ = 1.0;
  double p_false_alarm_ = 0.0;
};

// Applies detection noise to an ideal OR grid in place: one Bernoulli draw per
// cell, row-major, so the draw sequence depends only on the frame shape.
template <std::uniform_random_bit_generator Rng>
void apply_detection_noise(ObservationFrame& frame, const ChannelParams& channel,
                           Rng& rng) {
  if (channel.ideal()) return;
  std::bernoulli_distribution keep(channel.p_detect());
  std::bernoulli_distribution alarm(channel.p_false_alarm());
  const auto& shape = frame.shape();
  for (std::size_t r = 0; r < shape.raos; ++r) {
    for (std::size_t p = 0; p < shape.preambles; ++p) {
      const bool v = frame.at(r, p) ? keep(rng) : alarm(rng);
      frame.set(r, p, v);
    }
  }
}

// Bit-wise OR of all signatures; rao_count = L.
inline ObservationFrame ideal_superposition(FrameShape shape,
                                            std::span<const Signature* const> signatures) {
  ObservationFrame frame(shape, shape.raos);
  for (const Signature* s : signatures) {
    if (s->shape() != shape) {
      throw std::invalid_argument("signature shape " + to_string(s->shape()) +
                                  " does not match frame " + to_string(shape));
    }
    const auto slots = s->slots();
    for (std::size_t r = 0; r < slots.size(); ++r) {
      if (slots[r] != Signature::kIdle) frame.set(r, static_cast<std::size_t>(slots[r]));
    }
  }
  return frame;
}

// OR of the transmitted signatures seen through an imperfect detector. Noise
// is drawn once per cell of the combined grid, not per contributing device.
template <std::uniform_random_bit_generator Rng>
ObservationFrame superpose(FrameShape shape, std::span<const Signature* const> signatures,
                           const ChannelParams& channel, Rng& rng) {
  ObservationFrame frame = ideal_superposition(shape, signatures);
  apply_detection_noise(frame, channel, rng);
  return frame;
}

template <std::uniform_random_bit_generator Rng>
ObservationFrame superpose(std::span<const Signature> signatures, const ChannelParams& channel,
                           Rng& rng) {
  if (signatures.empty()) {
    throw std::invalid_argument("superpose of an empty set needs an explicit frame shape");
  }
  std::vector<const Signature*> ptrs;
  ptrs.reserve(signatures.size());
  for (const auto& s : signatures) ptrs.push_back(&s);
  return superpose(signatures.front().shape(), ptrs, channel, rng);
}

// True iff every active cell of candidate within the first `upto` rows is also
// active in the observation.
inline bool contains(const Signature& candidate, const ObservationFrame& observation,
                     std::size_t upto) {
  if (upto > observation.rao_count()) {
    throw std::invalid_argument("containment prefix " + std::to_string(upto) +
                                " beyond received RAOs " +
                                std::to_string(observation.rao_count()));
  }
  if (candidate.shape() != observation.shape()) {
    throw std::invalid_argument("candidate shape " + to_string(candidate.shape()) +
                                " does not match observation " +
                                to_string(observation.shape()));
  }
  const auto slots = candidate.slots();
  for (std::size_t r = 0; r < upto; ++r) {
    if (slots[r] != Signature::kIdle &&
        !observation.at(r, static_cast<std::size_t>(slots[r])))
      return false;
  }
  return true;
}

inline bool contains(const Signature& candidate, const ObservationFrame& observation) {
  return contains(candidate, observation, observation.rao_count());
}

}  // namespace sigra
