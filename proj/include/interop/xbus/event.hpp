#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "interop/common/bytes.hpp"
#include "interop/common/digest.hpp"

namespace interop::xbus {

/// Event kinds. CALL invokes a method on the destination contract; the rest
/// carry cross-chain transaction protocol messages.
enum class EventKind : std::uint8_t {
  Call = 0,
  ReadReq = 1,
  ReadResp = 2,
  MtPrepare = 3,
  MtVote = 4,
  MtDecide = 5,
  GtPrepare = 6,
  GtVote = 7,
  GtDecide = 8,
};

/// Cross-chain message. Digest covers every field.
struct Event {
  std::uint8_t version = 1;
  std::string source_chain;
  std::string dest_chain;
  std::string source_contract;
  std::string dest_contract;
  std::uint64_t nonce = 0;
  std::uint8_t kind = 0;
  Bytes payload;

  Digest digest() const;
  bool operator==(const Event&) const = default;
};

struct NodeSignature {
  std::string node_id;
  Bytes signature;

  bool operator==(const NodeSignature&) const = default;
};

/// An event plus source-chain node signatures over its digest.
struct SignedEventBatch {
  Event event;
  std::vector<NodeSignature> signatures;

  bool operator==(const SignedEventBatch&) const = default;
};

// Wire format (bit-exact):
//   Event = version(1) | len4+source_chain | len4+dest_chain | len4+source_contract
//         | len4+dest_contract | nonce(8) | kind(1) | len4+payload
//   Batch = Event | count(2) | count * (len4+node_id | len4+signature)
void encode_event(ByteWriter& w, const Event& e);
Bytes encode_event(const Event& e);
Event decode_event(ByteReader& r);

Bytes encode_batch(const SignedEventBatch& b);
SignedEventBatch decode_batch(std::span<const std::uint8_t> bytes);

}  // namespace interop::xbus
