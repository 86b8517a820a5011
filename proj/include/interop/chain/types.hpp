#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "interop/chain/value.hpp"
#include "interop/common/digest.hpp"
#include "interop/xbus/event.hpp"

namespace interop::chain {

/// Contract on some chain, or a plain user when `chain` is empty.
struct CallerRef {
  std::string id;
  std::string chain;

  static CallerRef user(std::string id) { return {std::move(id), {}}; }
  bool is_user() const { return chain.empty(); }
  auto operator<=>(const CallerRef&) const = default;
};

struct Transaction {
  Digest txn_id;
  CallerRef caller;
  std::string target_contract;
  std::string method;
  std::vector<Value> args;
  std::uint64_t nonce = 0;

  /// Digest over the canonical encoding of every field except txn_id.
  Digest compute_id() const;
  static Transaction make(CallerRef caller, std::string target, std::string method,
                          std::vector<Value> args, std::uint64_t nonce);

  bool operator==(const Transaction&) const = default;
};

struct BlockHeader {
  std::string chain_id;
  std::uint64_t height = 0;
  Digest prev_digest;
  Digest txn_root;
  Digest state_root;
  std::uint64_t tick = 0;

  Digest digest() const;
  bool operator==(const BlockHeader&) const = default;
};

struct Signature {
  std::string node_id;
  Bytes signature;

  bool operator==(const Signature&) const = default;
};

struct QuorumCert {
  Digest header_digest;
  std::vector<Signature> signatures;

  bool operator==(const QuorumCert&) const = default;
};

enum class TxnStatus : std::uint8_t { Success = 0, Failed = 1 };

struct Receipt {
  TxnStatus status = TxnStatus::Success;
  std::string error;
  Value result;
  /// Full keys written, in write order (last write per key only).
  std::vector<std::pair<std::string, Value>> writes;
  /// Cross-chain transaction this execution belongs to, if any.
  std::string xtxn_id;
  std::vector<Digest> events;

  bool ok() const { return status == TxnStatus::Success; }
  bool operator==(const Receipt&) const = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> txns;
  std::vector<Receipt> receipts;
  /// Outbound events, nonces already assigned.
  std::vector<xbus::Event> events;

  bool operator==(const Block&) const = default;
};

struct CertifiedBlock {
  Block block;
  QuorumCert cert;

  bool operator==(const CertifiedBlock&) const = default;
};

Bytes encode_transaction(const Transaction& t);
Transaction decode_transaction(ByteReader& r);
Bytes encode_header(const BlockHeader& h);
Bytes encode_block(const CertifiedBlock& b);
CertifiedBlock decode_block(std::span<const std::uint8_t> bytes);

}  // namespace interop::chain
