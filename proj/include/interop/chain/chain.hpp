#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "interop/chain/contract.hpp"
#include "interop/chain/crypto.hpp"
#include "interop/chain/merkle.hpp"
#include "interop/chain/state_store.hpp"
#include "interop/chain/types.hpp"
#include "interop/policy/ast.hpp"
#include "interop/policy/evaluator.hpp"

namespace interop::chain {

enum class Behavior : std::uint8_t { Honest, Silent, EquivocateDigest, ForgeEvents };

std::string_view behavior_name(Behavior b);
std::optional<Behavior> parse_behavior(std::string_view name);

struct ChainConfig {
  std::string chain_id;
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::vector<KeyPair> node_keys;
  std::map<std::string, Behavior> byzantine;

  /// Config with keys derived deterministically from the chain id.
  static ChainConfig generate(std::string chain_id, std::uint32_t n, std::uint32_t f,
                              const SignatureScheme& scheme);
};

std::string node_id(std::string_view chain_id, std::uint32_t index);

enum class ChainErrc {
  InvalidConfig,
  DuplicateContract,
  DuplicateNonce,
  UnknownContract,
  QuorumFailure,
  FutureHeight,
  InvalidRange,
  PolicyDenied,
};

std::string_view errc_name(ChainErrc c);

class ChainError : public std::runtime_error {
 public:
  ChainError(ChainErrc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}
  ChainErrc code() const { return code_; }

 private:
  ChainErrc code_;
};

/// Key prefixes owned by the built-in registry contract "sys".
inline constexpr std::string_view kSysContract = "sys";
inline constexpr std::string_view kLockPrefix = "xtxn.lock.";

class TxnContext;

/// Simulated permissioned chain: one sequencer, n signing nodes.
///
/// Each block first turns queued inbound events into transactions, then
/// drains the mempool in arrival order. Contracts become callable and
/// policies take effect from the block after the one that records them.
class Chain {
 public:
  Chain(ChainConfig cfg, std::shared_ptr<const SignatureScheme> scheme);

  const std::string& id() const { return cfg_.chain_id; }
  const ChainConfig& config() const { return cfg_; }
  const SignatureScheme& scheme() const { return *scheme_; }
  std::uint32_t quorum() const { return 2 * cfg_.f + 1; }

  std::string node_id(std::uint32_t index) const { return chain::node_id(cfg_.chain_id, index); }
  const std::map<std::string, Bytes>& public_keys() const { return public_keys_; }
  Behavior behavior(const std::string& node) const;
  void set_behavior(const std::string& node, Behavior b);

  /// Built-in contract, callable from genesis and exempt from lock checks.
  void install_system_contract(std::shared_ptr<Contract> c);
  /// Records a registration transaction owned by `owner`.
  Digest register_contract(std::shared_ptr<Contract> c, const std::string& owner = "admin");
  /// Parses eagerly; the attachment itself is a transaction by `owner`.
  Digest attach_policy(const std::string& contract_id, const std::string& src,
                       const std::string& owner = "admin");

  Digest submit(Transaction t);
  /// Builds a transaction with the caller's next unused nonce.
  Digest submit_call(const CallerRef& caller, const std::string& contract, const std::string& method,
                     std::vector<Value> args);

  /// Evaluates a contract's policy against committed state at the current
  /// height. Contracts without a policy allow everything.
  policy::Decision check_access(const std::string& contract_id, policy::AccessRequest req) const;

  bool has_seen(const std::string& source_chain, std::uint64_t nonce) const {
    return seen_events_.contains({source_chain, nonce});
  }

  /// Queues an inbound event for the next block. Returns false for a
  /// (source_chain, nonce) pair that was already accepted.
  bool deliver(const xbus::Event& e);

  bool has_pending() const { return !mempool_.empty() || !inbox_.empty(); }
  std::size_t pending() const { return mempool_.size() + inbox_.size(); }

  /// Executes pending work into a certified block. Nothing pending yields
  /// nullopt; too few valid node signatures throws QuorumFailure and leaves
  /// state and queues untouched.
  std::optional<CertifiedBlock> produce_block(std::uint64_t tick);

  std::uint64_t height() const { return blocks_.size() - 1; }
  const CertifiedBlock& block(std::uint64_t h) const;
  const std::vector<CertifiedBlock>& blocks() const { return blocks_; }

  Value read_state(std::string_view key, std::optional<std::uint64_t> height = std::nullopt) const;
  std::vector<StateEntry> get_history(std::string_view prefix, std::uint64_t from,
                                      std::uint64_t to) const;
  MerkleProof get_proof(std::string_view key, std::uint64_t height) const;
  const VersionedStore& store() const { return store_; }

  /// Policy-checked aggregate over a contract's current or historical state.
  Value aggregate(const CallerRef& caller, const std::string& contract_id,
                  const policy::AggExpr& agg) const;

  struct ReceiptRef {
    std::uint64_t height;
    std::uint32_t index;
  };
  std::optional<ReceiptRef> find_receipt(const Digest& txn_id) const;

  /// Verifies a certificate against this chain's node keys.
  bool verify_cert(const QuorumCert& qc) const;

  struct Stats {
    std::uint64_t blocks = 0;
    std::uint64_t txns = 0;
    std::uint64_t failed = 0;
    std::uint64_t quorum_failures = 0;
    std::uint64_t duplicate_events = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  friend class TxnContext;

  struct Overlay {
    std::map<std::string, Value, std::less<>> values;
    std::vector<StateEntry> entries;
  };

  struct PolicySlot {
    std::string source;
    std::shared_ptr<const policy::PolicyAst> ast;
  };

  Transaction to_transaction(const xbus::Event& e) const;
  Receipt execute(const Transaction& t, std::uint32_t index, std::uint64_t h, std::uint64_t tick,
                  Overlay& block, std::vector<xbus::Event>& out_events);
  void load_policies();
  policy::EvalContext eval_context(std::string_view contract, std::uint64_t h, const CallerRef& caller,
                                   const Overlay* block,
                                   const std::map<std::string, Value, std::less<>>* txn) const;
  Value sys_call(TxnContext& ctx, const std::string& method, const std::vector<Value>& args);

  ChainConfig cfg_;
  std::shared_ptr<const SignatureScheme> scheme_;
  std::map<std::string, Bytes> public_keys_;

  std::map<std::string, std::shared_ptr<Contract>, std::less<>> contracts_;
  std::map<std::string, PolicySlot, std::less<>> policies_;
  std::unordered_map<std::string, std::shared_ptr<const policy::PolicyAst>> policy_cache_;

  std::deque<Transaction> mempool_;
  std::deque<xbus::Event> inbox_;
  std::set<std::pair<CallerRef, std::uint64_t>> used_nonces_;
  std::map<CallerRef, std::uint64_t> next_nonce_;
  std::set<std::pair<std::string, std::uint64_t>> seen_events_;
  std::uint64_t next_event_nonce_ = 1;

  VersionedStore store_;
  std::vector<CertifiedBlock> blocks_;
  std::shared_ptr<const AuthenticatedMap> latest_map_;
  std::map<Digest, ReceiptRef> receipts_;
  Stats stats_;
};

/// Number of distinct signers in `keys` whose signature over `msg` verifies.
std::size_t count_valid_signatures(const SignatureScheme& scheme,
                                   const std::map<std::string, Bytes>& keys,
                                   std::span<const std::uint8_t> msg,
                                   const std::vector<Signature>& sigs);

}  // namespace interop::chain
