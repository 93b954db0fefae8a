#pragma once

// Base station side signature decoding.
//
// Full decoding waits for the whole frame and reports every codebook entry
// contained in the observation. Iterative decoding consumes the frame one RAO
// at a time, pruning candidates that contradict the received prefix and
// reporting a candidate early once the newest RAO holds an active cell that
// only it can explain. Reported signatures are final: they are never pruned
// again, since the device has already been told to proceed.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigra/codebook.hpp"
#include "sigra/ormac.hpp"

namespace sigra {

// Codebook indices of every entry contained in the complete observation.
inline std::vector<std::size_t> decode_full(const ObservationFrame& observation,
                                            const Codebook& codebook) {
  if (observation.shape() != codebook.shape()) {
    throw std::invalid_argument("observation " + to_string(observation.shape()) +
                                " does not match codebook " + to_string(codebook.shape()));
  }
  if (observation.rao_count() != observation.shape().raos) {
    throw std::invalid_argument("full decoding needs all " +
                                std::to_string(observation.shape().raos) + " RAOs");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    if (contains(codebook[i].signature, observation)) out.push_back(i);
  }
  return out;
}

struct TraceRecord {
  std::size_t rao = 0;  // 1-based
  std::size_t viable = 0;
  std::size_t decoded = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using DecodeTrace = std::vector<TraceRecord>;

inline void write_trace_csv(std::ostream& os, const DecodeTrace& trace) {
  os << "rao,viable,decoded\n";
  for (const auto& r : trace) os << r.rao << ',' << r.viable << ',' << r.decoded << '\n';
}

struct IterativeDecodeResult {
  std::vector<std::size_t> decoded;      // codebook indices, ascending
  std::vector<std::size_t> decoded_at;   // 1-based RAO per entry of `decoded`
  DecodeTrace trace;
};

class IterativeDecoder {
 public:
  static constexpr std::size_t kNotDecoded = 0;

  explicit IterativeDecoder(const Codebook& codebook)
      : codebook_(&codebook),
        viable_(codebook.size(), true),
        decoded_at_(codebook.size(), kNotDecoded),
        viable_count_(codebook.size()),
        cover_(codebook.shape().preambles, 0) {}

  std::size_t next_rao() const { return received_ + 1; }
  bool finished() const { return finished_; }
  std::size_t viable_count() const { return viable_count_; }
  std::size_t decoded_count() const { return decoded_count_; }
  const DecodeTrace& trace() const { return trace_; }

  bool viable(std::size_t idx) const { return viable_[idx]; }
  // 0 while undecoded, else the 1-based RAO at which it was reported.
  std::size_t decoded_at(std::size_t idx) const { return decoded_at_[idx]; }

  // Feeds the detected preambles of RAO `rao` (1-based, strictly in order).
  void receive(std::size_t rao, const std::vector<bool>& row) {
    const auto shape = codebook_->shape();
    if (finished_) throw std::logic_error("decoder already finished the frame");
    if (rao != received_ + 1) {
      throw std::invalid_argument("RAO " + std::to_string(rao) + " delivered out of order, expected " +
                                  std::to_string(received_ + 1));
    }
    if (row.size() != shape.preambles) {
      throw std::invalid_argument("RAO row has " + std::to_string(row.size()) +
                                  " preambles, expected " + std::to_string(shape.preambles));
    }
    const std::size_t r = rao - 1;

    // Prune undecoded candidates whose cell in this RAO was not observed.
    for (std::size_t i = 0; i < codebook_->size(); ++i) {
      if (!viable_[i] || decoded_at_[i] != kNotDecoded) continue;
      const auto p = codebook_->slot(i, r);
      if (p != Signature::kIdle && !row[static_cast<std::size_t>(p)]) {
        viable_[i] = false;
        --viable_count_;
      }
    }

    // Count viable coverers of each active cell in this RAO.
    std::fill(cover_.begin(), cover_.end(), 0);
    for (std::size_t i = 0; i < codebook_->size(); ++i) {
      if (!viable_[i]) continue;
      const auto p = codebook_->slot(i, r);
      if (p != Signature::kIdle) ++cover_[static_cast<std::size_t>(p)];
    }

    // An active cell with exactly one viable coverer can only be explained by
    // that candidate. Cells with no coverer (false alarms) carry no evidence.
    for (std::size_t i = 0; i < codebook_->size(); ++i) {
      if (!viable_[i] || decoded_at_[i] != kNotDecoded) continue;
      const auto p = codebook_->slot(i, r);
      if (p != Signature::kIdle && cover_[static_cast<std::size_t>(p)] == 1) {
        decoded_at_[i] = rao;
        ++decoded_count_;
      }
    }

    received_ = rao;
    if (rao == shape.raos) flush();
    trace_.push_back({rao, viable_count_, decoded_count_});
  }

  void receive_from(const ObservationFrame& observation, std::size_t rao) {
    if (rao > observation.rao_count())
      throw std::invalid_argument("RAO " + std::to_string(rao) + " not yet observed");
    std::vector<bool> row(observation.shape().preambles);
    for (std::size_t p = 0; p < row.size(); ++p) row[p] = observation.at(rao - 1, p);
    receive(rao, row);
  }

  IterativeDecodeResult result() const {
    IterativeDecodeResult res;
    res.trace = trace_;
    for (std::size_t i = 0; i < codebook_->size(); ++i) {
      if (decoded_at_[i] != kNotDecoded) {
        res.decoded.push_back(i);
        res.decoded_at.push_back(decoded_at_[i]);
      }
    }
    return res;
  }

 private:
  // End of frame: every still-viable candidate is reported at RAO L.
  void flush() {
    for (std::size_t i = 0; i < codebook_->size(); ++i) {
      if (viable_[i] && decoded_at_[i] == kNotDecoded) {
        decoded_at_[i] = codebook_->shape().raos;
        ++decoded_count_;
      }
    }
    finished_ = true;
  }

  const Codebook* codebook_;
  std::vector<bool> viable_;
  std::vector<std::size_t> decoded_at_;
  std::size_t viable_count_;
  std::size_t decoded_count_ = 0;
  std::size_t received_ = 0;
  bool finished_ = false;
  std::vector<std::size_t> cover_;
  DecodeTrace trace_;
};

// Runs the iterative decoder over a complete observation, RAO by RAO.
inline IterativeDecodeResult decode_iterative(const ObservationFrame& observation,
                                              const Codebook& codebook) {
  if (observation.shape() != codebook.shape()) {
    throw std::invalid_argument("observation " + to_string(observation.shape()) +
                                " does not match codebook " + to_string(codebook.shape()));
  }
  IterativeDecoder dec(codebook);
  for (std::size_t rao = 1; rao <= observation.rao_count(); ++rao) dec.receive_from(observation, rao);
  return dec.result();
}

}  // namespace sigra
