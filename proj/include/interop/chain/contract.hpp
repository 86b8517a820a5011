#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interop/chain/state_store.hpp"
#include "interop/chain/types.hpp"
#include "interop/policy/evaluator.hpp"

namespace interop::chain {

/// Aborts the running transaction. The chain records a Failed receipt with
/// "<code>: <message>" and discards its writes and events.
class ContractFailure : public std::runtime_error {
 public:
  ContractFailure(std::string code, const std::string& message)
      : std::runtime_error(message.empty() ? code : code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// What a handler sees while it runs inside a block. Keys passed to get/put
/// are relative to the running contract; the *_raw variants take full keys.
class ExecContext {
 public:
  virtual ~ExecContext() = default;

  virtual const std::string& chain_id() const = 0;
  virtual const std::string& contract_id() const = 0;
  virtual const CallerRef& caller() const = 0;
  virtual std::uint64_t height() const = 0;
  virtual std::uint64_t tick() const = 0;

  virtual Value get_raw(std::string_view key) = 0;
  /// Non-system contracts may only write their own namespace, and not keys
  /// held by a cross-chain lock.
  virtual void put_raw(std::string_view key, Value v) = 0;
  virtual std::optional<Version> version_raw(std::string_view key) = 0;
  virtual std::vector<std::pair<std::string, Value>> scan_raw(std::string_view prefix) = 0;

  /// Queues an outbound event. Source chain, source contract and nonce are
  /// filled in when the block commits.
  virtual void emit(xbus::Event e) = 0;
  /// Evaluates `contract`'s attached policy; contracts without one are open.
  virtual policy::Decision check_access(std::string_view contract, policy::AccessRequest req) = 0;
  virtual bool contract_active(std::string_view contract) = 0;
  /// Marks the receipt as belonging to a cross-chain transaction.
  virtual void tag_xtxn(std::string txn_id) = 0;

  Value get(std::string_view key) { return get_raw(contract_id() + "." + std::string(key)); }
  void put(std::string_view key, Value v) { put_raw(contract_id() + "." + std::string(key), std::move(v)); }
};

/// Native deterministic contract. Handlers must be pure functions of state,
/// arguments, caller and height.
class Contract {
 public:
  virtual ~Contract() = default;

  virtual const std::string& id() const = 0;
  virtual bool is_system() const { return false; }
  /// The access a call needs under the contract's policy. Default: Invoke on
  /// the method name.
  virtual policy::AccessRequest access_request(const std::string& method, const std::vector<Value>& args,
                                               const CallerRef& caller) const;
  virtual Value call(ExecContext& ctx, const std::string& method, const std::vector<Value>& args) = 0;
};

/// Helpers for handlers.
const Value& arg(const std::vector<Value>& args, std::size_t i);
std::int64_t arg_int(const std::vector<Value>& args, std::size_t i);
const std::string& arg_str(const std::vector<Value>& args, std::size_t i);

/// Payload of a CALL event: method, then the argument list.
Bytes encode_call(const std::string& method, const std::vector<Value>& args);
std::pair<std::string, std::vector<Value>> decode_call(std::span<const std::uint8_t> payload);

}  // namespace interop::chain
