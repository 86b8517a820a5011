#pragma once

#include <memory>
#include <string>

#include "interop/chain/chain.hpp"
#include "interop/chain/contract.hpp"
#include "interop/xbus/key_directory.hpp"
#include "interop/xchain/messages.hpp"

namespace interop::xchain {

/// System contract "xtxn", present on every chain. It plays both roles of
/// the cross-chain protocol.
///
/// Coordinator side, called by the user that owns `on_behalf`:
///   send(on_behalf, kind, dest_chain, payload)
///   prepare(on_behalf, txn_id, mode, pairs(chain, PrepareMsg))
///   decide(on_behalf, txn_id, want_commit, pairs(chain, vote batch))
///   abort(on_behalf, txn_id, pairs(chain, ""))
///   resend(on_behalf, txn_id, chain)
///
/// Participant side, reached through inbound protocol events:
///   on_message(kind, payload, dest_contract)
///
/// State lives under "xtxn.": lock.<key>, coord.<txn>, prep.<txn>,
/// voted.<txn>, done.<txn> (participant) and rec.<txn>, vote.<txn>.<chain>,
/// ack.<txn>.<chain> (coordinator).
class XtxnContract final : public chain::Contract {
 public:
  explicit XtxnContract(std::shared_ptr<const xbus::KeyDirectory> keys) : keys_(std::move(keys)) {}

  const std::string& id() const override { return id_; }
  bool is_system() const override { return true; }
  chain::Value call(chain::ExecContext& ctx, const std::string& method,
                    const std::vector<chain::Value>& args) override;

 private:
  std::string id_{kXtxn};
  std::shared_ptr<const xbus::KeyDirectory> keys_;
};

/// Installs the contract on a chain.
void install_xtxn(chain::Chain& c, std::shared_ptr<const xbus::KeyDirectory> keys);

inline std::string lock_key(const std::string& key) { return std::string(chain::kLockPrefix) + key; }

}  // namespace interop::xchain
