#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sigra/signature_codec.hpp"

namespace sigra {

struct CodebookEntry {
  DeviceIdentity id;
  Signature signature;
};

// Signatures of the whole population, shared by devices and base station.
class Codebook {
 public:
  Codebook() = default;
  Codebook(SignatureParams params, std::vector<CodebookEntry> entries)
      : params_(params), entries_(std::move(entries)) {
    // Entries may be arbitrary signatures; K is the nominal weight only.
    if (params_.raos == 0 || params_.preambles == 0)
      throw std::invalid_argument("codebook frame needs L >= 1 and M >= 1");
    std::unordered_set<std::uint64_t> seen;
    std::set<Signature> distinct;
    for (const auto& e : entries_) {
      if (!seen.insert(e.id.u).second) {
        throw std::invalid_argument("duplicate device identity u=" + std::to_string(e.id.u));
      }
      if (e.signature.shape() != params_.shape()) {
        throw std::invalid_argument("codebook entry u=" + std::to_string(e.id.u) +
                                    " has shape " + to_string(e.signature.shape()));
      }
      distinct.insert(e.signature);
    }
    duplicate_signatures_ = entries_.size() - distinct.size();
  }

  const SignatureParams& params() const { return params_; }
  FrameShape shape() const { return params_.shape(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<CodebookEntry>& entries() const { return entries_; }
  const CodebookEntry& operator[](std::size_t i) const { return entries_[i]; }
  // Preamble of entry i in 0-based row r, or Signature::kIdle.
  std::int32_t slot(std::size_t i, std::size_t r) const { return entries_[i].signature.slots()[r]; }

  // Entries whose signature repeats one seen earlier in the codebook.
  std::size_t duplicate_signatures() const { return duplicate_signatures_; }

 private:
  SignatureParams params_{};
  std::vector<CodebookEntry> entries_;
  std::size_t duplicate_signatures_ = 0;
};

inline Codebook build_codebook(const std::vector<DeviceIdentity>& identities,
                               const SignatureParams& params) {
  params.validate();
  std::vector<CodebookEntry> entries;
  entries.reserve(identities.size());
  for (const auto& id : identities) entries.push_back({id, generate_signature(id, params)});
  return Codebook(params, std::move(entries));
}

// Identities 0..T-1 with empty labels.
inline std::vector<DeviceIdentity> sequential_identities(std::size_t population) {
  std::vector<DeviceIdentity> ids(population);
  for (std::size_t i = 0; i < population; ++i) ids[i].u = i;
  return ids;
}

// Text format:
//   L M K mixer_mode
//   u hex
// where hex is the row-major L*M bitmap, bit (r, p) at index r*M + p, packed
// MSB-first into bytes (zero padded), two lowercase hex digits per byte.

inline std::string encode_bitmap(const Signature& s) {
  const auto& shape = s.shape();
  std::vector<std::uint8_t> bytes((shape.cells() + 7) / 8, 0);
  const auto slots = s.slots();
  for (std::size_t r = 0; r < shape.raos; ++r) {
    if (slots[r] == Signature::kIdle) continue;
    const std::size_t bit = r * shape.preambles + static_cast<std::size_t>(slots[r]);
    bytes[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

inline Signature decode_bitmap(std::string_view hex, FrameShape shape) {
  const std::size_t nbytes = (shape.cells() + 7) / 8;
  if (hex.size() != nbytes * 2)
    throw std::invalid_argument("bitmap has " + std::to_string(hex.size()) +
                                " hex digits, expected " + std::to_string(nbytes * 2));
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
  };
  Signature sig(shape);
  for (std::size_t bit = 0; bit < nbytes * 8; ++bit) {
    const unsigned byte = nibble(hex[2 * (bit / 8)]) << 4 | nibble(hex[2 * (bit / 8) + 1]);
    if (!(byte & (0x80u >> (bit % 8)))) continue;
    if (bit >= shape.cells()) throw std::invalid_argument("bitmap padding bits must be zero");
    const std::size_t r = bit / shape.preambles;
    if (sig.preamble_at(r)) {
      throw std::invalid_argument("bitmap activates two preambles in RAO " +
                                  std::to_string(r + 1));
    }
    sig.activate(r, bit % shape.preambles);
  }
  return sig;
}

inline void write_codebook(std::ostream& os, const Codebook& cb) {
  const auto& p = cb.params();
  os << p.raos << ' ' << p.preambles << ' ' << p.weight << ' ' << to_string(p.mixer) << '\n';
  for (const auto& e : cb.entries()) os << e.id.u << ' ' << encode_bitmap(e.signature) << '\n';
}

inline Codebook read_codebook(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("codebook: missing header line");
  SignatureParams params;
  {
    std::istringstream hs(line);
    std::string mixer;
    if (!(hs >> params.raos >> params.preambles >> params.weight >> mixer))
      throw std::invalid_argument("codebook: malformed header '" + line + "'");
    params.mixer = parse_mixer_mode(mixer);
  }
  params.validate();
  std::vector<CodebookEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    CodebookEntry e;
    std::string hex;
    if (!(ls >> e.id.u >> hex))
      throw std::invalid_argument("codebook line " + std::to_string(lineno) + ": malformed");
    try {
      e.signature = decode_bitmap(hex, params.shape());
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("codebook line " + std::to_string(lineno) + ": " + err.what());
    }
    if (!(e.signature == generate_signature(e.id.u, params))) {
      throw std::invalid_argument("codebook line " + std::to_string(lineno) +
                                  ": bitmap does not match the construction for u=" +
                                  std::to_string(e.id.u));
    }
    entries.push_back(std::move(e));
  }
  return Codebook(params, std::move(entries));
}

}  // namespace sigra
