#pragma once

#include <string>
#include <vector>

#include "interop/simctl/runlog.hpp"

namespace interop::simctl {

struct Check {
  std::string name;
  bool pass = true;
  /// First counterexamples, e.g. "coinB Bidder.x txn=ab12: ...".
  std::vector<std::string> violations;
};

struct AuditReport {
  std::vector<Check> checks;

  bool ok() const;
  const Check& get(const std::string& name) const;
  std::string str() const;
};

/// Re-derives every chain's state from the logged blocks and checks:
///   atomicity     each cross-chain write set applied everywhere or nowhere,
///                 per the coordinator's logged decision
///   serial_order  committed transactions applied in one consistent order
///   conservation  Bidder balances plus escrows equal the funded total
///                 after every block
///   at_most_once  no inbound event executed twice on a chain
///   freshness     every read response answers a nonce requested of it
///   locks         lock table empty at the end
///   round_trips   committed mini-transactions took 2 trips, conclusions
///                 at least read trips + 2
///   winner        concluded winner equals an independent argmax over the
///                 successful bids in the ledgers
///   exclusivity   ticket owned by the winner, winner's escrow deducted by
///                 exactly the winning amount
///   loser_safety  losers get their bid back in full
AuditReport audit_log(const RunLog& log);
/// Parses then audits; CorruptLog propagates.
AuditReport audit_text(const std::string& text);

}  // namespace interop::simctl
