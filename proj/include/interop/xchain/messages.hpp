#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "interop/chain/state_store.hpp"
#include "interop/chain/value.hpp"
#include "interop/xbus/event.hpp"

namespace interop::xchain {

using chain::Value;
using chain::Version;

enum class Mode : std::uint8_t { Locks = 0, Occ = 1, Mini = 2 };

std::string_view mode_name(Mode m);

/// Key prefix of the cross-chain transaction system contract.
inline constexpr std::string_view kXtxn = "xtxn";

/// Splits "Contract.rest" into ("Contract", "rest").
std::pair<std::string, std::string> split_key(const std::string& key);

struct ReadRequestMsg {
  std::uint64_t nonce = 0;
  /// Empty for a plain verified read.
  std::string txn_id;
  /// Acquire the per-key lock for txn_id before reading.
  bool lock = false;
  std::vector<std::string> keys;

  bool operator==(const ReadRequestMsg&) const = default;
};

struct ReadItem {
  std::string key;
  Value value;
  std::optional<Version> version;

  bool operator==(const ReadItem&) const = default;
};

/// Body of a READ_RESP event. Its encoding starts with the values, then the
/// request nonce and the anchor height, so the carrier digest binds all three.
struct ReadResponseMsg {
  std::vector<ReadItem> items;
  std::uint64_t nonce = 0;
  std::uint64_t anchor_height = 0;
  /// Empty on success, otherwise "Locked", "Decided" or "PolicyDenied: ...".
  std::string status;

  bool operator==(const ReadResponseMsg&) const = default;
};

struct PrepareMsg {
  std::string txn_id;
  Mode mode = Mode::Occ;
  /// Mini-transactions: expected current values.
  std::vector<std::pair<std::string, Value>> compares;
  /// General transactions carry the version each read observed.
  std::vector<std::pair<std::string, std::optional<Version>>> reads;
  std::vector<std::pair<std::string, Value>> writes;

  bool operator==(const PrepareMsg&) const = default;
};

enum class VotePhase : std::uint8_t { Vote = 0, Ack = 1 };

struct VoteMsg {
  std::string txn_id;
  VotePhase phase = VotePhase::Vote;
  bool yes = false;
  std::string reason;
  std::vector<ReadItem> reads;

  bool operator==(const VoteMsg&) const = default;
};

struct DecideMsg {
  std::string txn_id;
  bool commit = false;

  bool operator==(const DecideMsg&) const = default;
};

enum class Phase : std::uint8_t { Prepare = 0, Commit = 1, Abort = 2 };

/// Coordinator-chain ledger record of one two-phase commit.
struct TwoPCRecord {
  std::string txn_id;
  /// Contract the coordinator acts for.
  std::string on_behalf;
  Phase phase = Phase::Prepare;
  Mode mode = Mode::Occ;
  /// Participant chain and the prepare payload it was sent.
  std::vector<std::pair<std::string, Bytes>> participants;
  /// Participant chain, its vote, and the encoded signed vote batch.
  struct Vote {
    std::string chain;
    bool yes = false;
    Bytes batch;
    bool operator==(const Vote&) const = default;
  };
  std::vector<Vote> votes;

  bool operator==(const TwoPCRecord&) const = default;
};

Bytes encode(const ReadRequestMsg& m);
Bytes encode(const ReadResponseMsg& m);
Bytes encode(const PrepareMsg& m);
Bytes encode(const VoteMsg& m);
Bytes encode(const DecideMsg& m);
Bytes encode(const TwoPCRecord& m);

ReadRequestMsg decode_read_request(std::span<const std::uint8_t> b);
ReadResponseMsg decode_read_response(std::span<const std::uint8_t> b);
PrepareMsg decode_prepare(std::span<const std::uint8_t> b);
VoteMsg decode_vote(std::span<const std::uint8_t> b);
DecideMsg decode_decide(std::span<const std::uint8_t> b);
TwoPCRecord decode_record(std::span<const std::uint8_t> b);

/// Encoded list of (chain, bytes) pairs, used for call arguments.
Bytes encode_pairs(const std::vector<std::pair<std::string, Bytes>>& v);
std::vector<std::pair<std::string, Bytes>> decode_pairs(std::span<const std::uint8_t> b);

}  // namespace interop::xchain
