#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "interop/chain/merkle.hpp"
#include "interop/chain/types.hpp"
#include "interop/sim/task.hpp"
#include "interop/sim/world.hpp"
#include "interop/xbus/key_directory.hpp"
#include "interop/xchain/messages.hpp"

namespace interop::xchain {

enum class XErrc { PolicyDenied, StaleQuorum, ProofInvalid, Timeout, LockTimeout, InvalidState };

std::string_view xerrc_name(XErrc c);

class XchainError : public std::runtime_error {
 public:
  XchainError(XErrc code, const std::string& message)
      : std::runtime_error(std::string(xerrc_name(code)) + ": " + message), code_(code) {}
  XErrc code() const { return code_; }

 private:
  XErrc code_;
};

struct XConfig {
  /// Ticks to wait for a reply before the first retransmission; doubles on
  /// every retry.
  std::uint64_t response_timeout = 16;
  std::uint32_t retry_limit = 5;
  /// Locks mode: ticks a request may keep getting "Locked" before the
  /// transaction aborts itself.
  std::uint64_t lock_timeout = 50;
  std::uint64_t lock_retry_delay = 3;
};

/// Result of a cross-chain read. The contract path carries the signed
/// READ_RESP event; the storage path carries a Merkle proof plus the
/// certified header it is anchored to.
struct ReadResponse {
  std::string chain;
  std::vector<std::string> keys;
  std::vector<Value> values;
  std::vector<std::optional<Version>> versions;
  std::uint64_t nonce = 0;
  std::uint64_t anchor_height = 0;
  std::string status;

  std::optional<xbus::SignedEventBatch> carrier;

  std::optional<chain::MerkleProof> proof;
  std::optional<chain::BlockHeader> header;
  std::optional<chain::QuorumCert> cert;

  const Value& value() const { return values.at(0); }
};

/// Throws StaleQuorum if fewer than f+1 (contract path) or 2f+1 (storage
/// path) source-chain signatures verify or the nonce is not the expected
/// one, and ProofInvalid if a proof does not recompute to the certified root.
void verify_read_response(const xbus::KeyDirectory& keys, const ReadResponse& r, std::uint64_t expected_nonce);

/// Per-transaction message accounting. A round trip is a request phase
/// sent for the first time; resends of the same phase count separately.
struct TxnMeter {
  std::string kind;
  std::uint32_t round_trips = 0;
  std::uint32_t retransmissions = 0;
  std::string outcome;
  std::string reason;
};

class Meter {
 public:
  TxnMeter& at(const std::string& txn) { return txns_[txn]; }
  const std::map<std::string, TxnMeter>& txns() const { return txns_; }

 private:
  std::map<std::string, TxnMeter> txns_;
};

enum class TxnState { Active, Prepared, Committed, Aborted };

using ChainKey = std::pair<std::string, std::string>;

struct GeneralTxn {
  std::string txn_id;
  Mode mode = Mode::Occ;
  TxnState state = TxnState::Active;
  std::string abort_reason;
  std::map<ChainKey, std::optional<Version>> read_set;
  std::map<ChainKey, Value> write_set;
  std::set<ChainKey> locked;
  std::set<std::string> touched;
};

struct CommitOutcome {
  bool committed = false;
  std::string reason;
};

struct MiniTxn {
  std::vector<std::tuple<std::string, std::string, Value>> compares;
  std::vector<ChainKey> reads;
  std::vector<std::tuple<std::string, std::string, Value>> writes;
};

struct MiniOutcome {
  std::string txn_id;
  bool committed = false;
  std::string reason;
  std::map<ChainKey, Value> reads;
};

/// Off-chain driver of cross-chain transactions. It acts for `on_behalf`, a
/// contract on `chain` owned by the user `owner`, by submitting calls to the
/// xtxn contract there and watching accepted batches for the replies.
class Coordinator {
 public:
  Coordinator(sim::World& world, std::string chain, std::string on_behalf, std::string owner, XConfig cfg = {});
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  const std::string& chain() const { return chain_; }
  const std::string& on_behalf() const { return on_behalf_; }
  const XConfig& config() const { return cfg_; }

  /// Contract path: one round trip, f+1 signatures over the response.
  sim::Task<ReadResponse> verified_read(std::string chain, std::vector<std::string> keys);
  /// Storage path: value plus Merkle proof from one node of `chain`,
  /// anchored at its latest certified header.
  ReadResponse storage_read(const std::string& chain, const std::string& key, std::uint32_t node = 0);

  GeneralTxn begin(Mode mode);
  sim::Task<Value> txn_read(GeneralTxn& t, std::string chain, std::string key);
  /// All keys in one round trip.
  sim::Task<std::vector<Value>> txn_read_many(GeneralTxn& t, std::string chain, std::vector<std::string> keys);
  sim::Task<void> txn_write(GeneralTxn& t, std::string chain, std::string key, Value v);
  sim::Task<CommitOutcome> txn_commit(GeneralTxn& t);
  sim::Task<void> txn_abort(GeneralTxn& t, std::string reason);

  sim::Task<MiniOutcome> execute_minitxn(MiniTxn m);

  Meter& meter() { return meter_; }
  const Meter& meter() const { return meter_; }

  struct Board;

 private:
  struct PhaseResult {
    bool committed = false;
    std::string reason;
    std::map<std::string, VoteMsg> votes;
  };

  std::string new_txn_id();
  Digest submit(const std::string& method, std::vector<Value> args);
  sim::Task<ReadResponse> request(std::string meter_id, std::string chain, ReadRequestMsg req);
  sim::Task<ReadResponseMsg> lock_request(GeneralTxn& t, std::string chain, std::vector<std::string> keys);
  sim::Task<PhaseResult> two_phase(std::string txn, Mode mode, std::vector<std::pair<std::string, PrepareMsg>> parts);
  sim::Task<void> await_acks(std::string txn, std::vector<std::string> chains);
  void fail(GeneralTxn& t, const std::string& reason);

  sim::World& world_;
  std::string chain_;
  std::string on_behalf_;
  std::string owner_;
  XConfig cfg_;
  std::shared_ptr<Board> board_;
  std::uint64_t next_nonce_;
  std::uint64_t counter_ = 0;
  Meter meter_;
};

}  // namespace interop::xchain
