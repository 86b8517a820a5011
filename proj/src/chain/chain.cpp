#include "interop/chain/chain.hpp"

#include <algorithm>

#include "interop/policy/parser.hpp"

namespace interop::chain {

using StateMap = std::map<std::string, Value, std::less<>>;

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::Silent: return "silent";
    case Behavior::EquivocateDigest: return "equivocate";
    case Behavior::ForgeEvents: return "forge";
  }
  return "?";
}

std::optional<Behavior> parse_behavior(std::string_view name) {
  for (auto b : {Behavior::Honest, Behavior::Silent, Behavior::EquivocateDigest, Behavior::ForgeEvents}) {
    if (behavior_name(b) == name) return b;
  }
  return std::nullopt;
}

std::string_view errc_name(ChainErrc c) {
  switch (c) {
    case ChainErrc::InvalidConfig: return "InvalidConfig";
    case ChainErrc::DuplicateContract: return "DuplicateContract";
    case ChainErrc::DuplicateNonce: return "DuplicateNonce";
    case ChainErrc::UnknownContract: return "UnknownContract";
    case ChainErrc::QuorumFailure: return "QuorumFailure";
    case ChainErrc::FutureHeight: return "FutureHeight";
    case ChainErrc::InvalidRange: return "InvalidRange";
    case ChainErrc::PolicyDenied: return "PolicyDenied";
  }
  return "?";
}

std::string node_id(std::string_view chain_id, std::uint32_t index) {
  return std::string(chain_id) + "/" + std::to_string(index);
}

ChainConfig ChainConfig::generate(std::string chain_id, std::uint32_t n, std::uint32_t f,
                                  const SignatureScheme& scheme) {
  ChainConfig cfg;
  cfg.n = n;
  cfg.f = f;
  for (std::uint32_t i = 0; i < n; ++i) {
    cfg.node_keys.push_back(scheme.derive_keypair(to_bytes("node-key/" + chain_id + "/" + std::to_string(i))));
  }
  cfg.chain_id = std::move(chain_id);
  return cfg;
}

std::size_t count_valid_signatures(const SignatureScheme& scheme,
                                   const std::map<std::string, Bytes>& keys,
                                   std::span<const std::uint8_t> msg,
                                   const std::vector<Signature>& sigs) {
  std::set<std::string_view> seen;
  for (const auto& s : sigs) {
    const auto it = keys.find(s.node_id);
    if (it == keys.end() || seen.contains(s.node_id)) continue;
    if (scheme.verify(it->second, msg, s.signature)) seen.insert(s.node_id);
  }
  return seen.size();
}

namespace {

Value layered_get(const VersionedStore& store, const StateMap* block, const StateMap* txn,
                  std::string_view key) {
  if (txn) {
    if (auto it = txn->find(key); it != txn->end()) return it->second;
  }
  if (block) {
    if (auto it = block->find(key); it != block->end()) return it->second;
  }
  return store.get(key);
}

std::vector<std::pair<std::string, Value>> layered_scan(const VersionedStore& store, const StateMap* block,
                                                        const StateMap* txn, std::string_view prefix) {
  StateMap merged;
  auto take = [&](const StateMap& m) {
    for (auto it = m.lower_bound(prefix); it != m.end() && it->first.starts_with(prefix); ++it) {
      merged.insert_or_assign(it->first, it->second);
    }
  };
  take(store.current());
  if (block) take(*block);
  if (txn) take(*txn);
  std::vector<std::pair<std::string, Value>> out;
  for (auto& [k, v] : merged) {
    if (!v.is_null()) out.emplace_back(k, std::move(v));
  }
  return out;
}

}  // namespace

class TxnContext final : public ExecContext {
 public:
  TxnContext(Chain& chain, const Transaction& t, std::string contract, bool system, std::uint64_t h,
             std::uint32_t index, std::uint64_t tick, const Chain::Overlay& block)
      : chain_(chain),
        txn_(t),
        contract_(std::move(contract)),
        system_(system),
        height_(h),
        index_(index),
        tick_(tick),
        block_(block) {}

  const std::string& chain_id() const override { return chain_.id(); }
  const std::string& contract_id() const override { return contract_; }
  const CallerRef& caller() const override { return txn_.caller; }
  std::uint64_t height() const override { return height_; }
  std::uint64_t tick() const override { return tick_; }

  Value get_raw(std::string_view key) override {
    return layered_get(chain_.store_, &block_.values, &writes_, key);
  }

  void put_raw(std::string_view key, Value v) override {
    if (!system_) {
      if (!key.starts_with(contract_ + ".")) {
        throw ContractFailure("NamespaceViolation", std::string(key));
      }
      if (!get_raw(std::string(kLockPrefix) + std::string(key)).is_null()) {
        throw ContractFailure("Locked", std::string(key));
      }
    }
    writes_.insert_or_assign(std::string(key), std::move(v));
  }

  std::optional<Version> version_raw(std::string_view key) override {
    if (writes_.contains(key)) return Version{height_, index_};
    if (block_.values.contains(key)) {
      for (auto it = block_.entries.rbegin(); it != block_.entries.rend(); ++it) {
        if (it->key == key) return it->version;
      }
    }
    return chain_.store_.version(key);
  }

  std::vector<std::pair<std::string, Value>> scan_raw(std::string_view prefix) override {
    return layered_scan(chain_.store_, &block_.values, &writes_, prefix);
  }

  void emit(xbus::Event e) override {
    e.source_chain = chain_.id();
    if (!system_ || e.source_contract.empty()) e.source_contract = contract_;
    events_.push_back(std::move(e));
  }

  policy::Decision check_access(std::string_view contract, policy::AccessRequest req) override {
    const auto it = chain_.policies_.find(contract);
    if (it == chain_.policies_.end()) return policy::Decision::allow();
    req.height = height_;
    const CallerRef who{req.caller_id, req.caller_chain};
    return policy::evaluate(*it->second.ast, req,
                            chain_.eval_context(contract, height_, who, &block_, &writes_));
  }

  bool contract_active(std::string_view contract) override {
    const auto it = chain_.contracts_.find(contract);
    if (it == chain_.contracts_.end()) return false;
    return it->second->is_system() ||
           !chain_.store_.get("sys.contract." + std::string(contract)).is_null();
  }

  void tag_xtxn(std::string txn_id) override { xtxn_ = std::move(txn_id); }

  const StateMap& writes() const { return writes_; }
  std::vector<xbus::Event>& events() { return events_; }
  const std::string& xtxn() const { return xtxn_; }

 private:
  Chain& chain_;
  const Transaction& txn_;
  std::string contract_;
  bool system_;
  std::uint64_t height_;
  std::uint32_t index_;
  std::uint64_t tick_;
  const Chain::Overlay& block_;
  StateMap writes_;
  std::vector<xbus::Event> events_;
  std::string xtxn_;
};

Chain::Chain(ChainConfig cfg, std::shared_ptr<const SignatureScheme> scheme)
    : cfg_(std::move(cfg)), scheme_(std::move(scheme)) {
  if (cfg_.chain_id.empty()) throw ChainError(ChainErrc::InvalidConfig, "empty chain id");
  if (cfg_.n == 0 || cfg_.n < 3 * cfg_.f + 1) {
    throw ChainError(ChainErrc::InvalidConfig, "n=" + std::to_string(cfg_.n) + " < 3f+1 with f=" +
                                                   std::to_string(cfg_.f));
  }
  if (cfg_.node_keys.size() != cfg_.n) {
    throw ChainError(ChainErrc::InvalidConfig, "expected " + std::to_string(cfg_.n) + " node keys");
  }
  for (std::uint32_t i = 0; i < cfg_.n; ++i) public_keys_[node_id(i)] = cfg_.node_keys[i].public_key;
  for (const auto& [node, b] : cfg_.byzantine) {
    if (!public_keys_.contains(node)) throw ChainError(ChainErrc::InvalidConfig, "unknown node " + node);
  }

  CertifiedBlock genesis;
  genesis.block.header.chain_id = cfg_.chain_id;
  genesis.block.header.txn_root = merkle::empty_root();
  genesis.block.header.state_root = merkle::empty_root();
  const Digest d = genesis.block.header.digest();
  genesis.cert.header_digest = d;
  for (std::uint32_t i = 0; i < cfg_.n; ++i) {
    genesis.cert.signatures.push_back({node_id(i), scheme_->sign(cfg_.node_keys[i], d.span())});
  }
  blocks_.push_back(std::move(genesis));
  latest_map_ = std::make_shared<AuthenticatedMap>();
}

Behavior Chain::behavior(const std::string& node) const {
  const auto it = cfg_.byzantine.find(node);
  return it == cfg_.byzantine.end() ? Behavior::Honest : it->second;
}

void Chain::set_behavior(const std::string& node, Behavior b) {
  if (!public_keys_.contains(node)) throw ChainError(ChainErrc::InvalidConfig, "unknown node " + node);
  if (b == Behavior::Honest) {
    cfg_.byzantine.erase(node);
  } else {
    cfg_.byzantine[node] = b;
  }
}

void Chain::install_system_contract(std::shared_ptr<Contract> c) {
  const std::string id = c->id();
  if (id == kSysContract || contracts_.contains(id)) throw ChainError(ChainErrc::DuplicateContract, id);
  contracts_.emplace(id, std::move(c));
}

Digest Chain::register_contract(std::shared_ptr<Contract> c, const std::string& owner) {
  const std::string id = c->id();
  if (id == kSysContract || contracts_.contains(id)) throw ChainError(ChainErrc::DuplicateContract, id);
  contracts_.emplace(id, std::move(c));
  return submit_call(CallerRef::user(owner), std::string(kSysContract), "register",
                     {Value::string(id), Value::string(owner)});
}

Digest Chain::attach_policy(const std::string& contract_id, const std::string& src,
                            const std::string& owner) {
  policy::parse_policy(src);
  if (!contracts_.contains(contract_id)) throw ChainError(ChainErrc::UnknownContract, contract_id);
  return submit_call(CallerRef::user(owner), std::string(kSysContract), "attach",
                     {Value::string(contract_id), Value::string(src)});
}

Digest Chain::submit(Transaction t) {
  if (t.target_contract != kSysContract && !contracts_.contains(t.target_contract)) {
    throw ChainError(ChainErrc::UnknownContract, t.target_contract);
  }
  if (!used_nonces_.emplace(t.caller, t.nonce).second) {
    throw ChainError(ChainErrc::DuplicateNonce, t.caller.id + " nonce " + std::to_string(t.nonce));
  }
  auto& next = next_nonce_[t.caller];
  next = std::max(next, t.nonce + 1);
  t.txn_id = t.compute_id();
  const Digest id = t.txn_id;
  mempool_.push_back(std::move(t));
  return id;
}

Digest Chain::submit_call(const CallerRef& caller, const std::string& contract, const std::string& method,
                          std::vector<Value> args) {
  std::uint64_t nonce = next_nonce_[caller];
  while (used_nonces_.contains({caller, nonce})) ++nonce;
  return submit(Transaction::make(caller, contract, method, std::move(args), nonce));
}

bool Chain::deliver(const xbus::Event& e) {
  if (e.dest_chain != cfg_.chain_id || !seen_events_.emplace(e.source_chain, e.nonce).second) {
    ++stats_.duplicate_events;
    return false;
  }
  inbox_.push_back(e);
  return true;
}

Transaction Chain::to_transaction(const xbus::Event& e) const {
  Transaction t;
  t.caller = {e.source_contract, e.source_chain};
  t.nonce = e.nonce;
  if (e.kind == static_cast<std::uint8_t>(xbus::EventKind::Call)) {
    t.target_contract = e.dest_contract;
    try {
      auto [method, args] = decode_call(e.payload);
      t.method = std::move(method);
      t.args = std::move(args);
    } catch (const DecodeError&) {
      t.method.clear();
    }
  } else {
    t.target_contract = "xtxn";
    t.method = "on_message";
    t.args = {Value::integer(e.kind), Value::bytes(e.payload), Value::string(e.dest_contract)};
  }
  t.txn_id = t.compute_id();
  return t;
}

void Chain::load_policies() {
  policies_.clear();
  for (const auto& [id, c] : contracts_) {
    const Value src = store_.get("sys.policy." + id);
    if (!src.is_str()) continue;
    auto& ast = policy_cache_[src.as_str()];
    if (!ast) ast = std::make_shared<const policy::PolicyAst>(policy::parse_policy(src.as_str()));
    policies_[id] = {src.as_str(), ast};
  }
}

policy::EvalContext Chain::eval_context(std::string_view contract, std::uint64_t h, const CallerRef& caller,
                                        const Overlay* block, const StateMap* txn) const {
  const std::string ns = std::string(contract) + ".";
  const StateMap* block_values = block ? &block->values : nullptr;
  policy::EvalContext ctx;
  ctx.height = h;
  ctx.caller_id = caller.id;
  ctx.caller_chain = caller.chain;
  ctx.read = [this, ns, block_values, txn](std::string_view key) {
    return layered_get(store_, block_values, txn, ns + std::string(key));
  };
  ctx.scan = [this, ns, block_values, txn](std::string_view prefix) {
    auto rows = layered_scan(store_, block_values, txn, ns + std::string(prefix));
    for (auto& [k, v] : rows) k.erase(0, ns.size());
    return rows;
  };
  ctx.history = [this, ns, block](std::string_view prefix, std::uint64_t from, std::uint64_t to) {
    const std::string full = ns + std::string(prefix);
    std::vector<StateEntry> out;
    const std::uint64_t committed = height();
    if (from <= committed) out = store_.history(full, from, std::min(to, committed));
    if (block) {
      for (const auto& e : block->entries) {
        if (e.version.height >= from && e.version.height <= to && e.key.starts_with(full)) out.push_back(e);
      }
    }
    for (auto& e : out) e.key.erase(0, ns.size());
    return out;
  };
  return ctx;
}

Value Chain::sys_call(TxnContext& ctx, const std::string& method, const std::vector<Value>& args) {
  if (method == "register") {
    const std::string& id = arg_str(args, 0);
    const std::string& owner = arg_str(args, 1);
    if (!ctx.get_raw("sys.contract." + id).is_null()) throw ContractFailure("DuplicateContract", id);
    if (!contracts_.contains(id)) throw ContractFailure("UnknownContract", id);
    ctx.put_raw("sys.contract." + id, Value::string(owner));
    return Value::null();
  }
  if (method == "attach") {
    const std::string& id = arg_str(args, 0);
    const std::string& src = arg_str(args, 1);
    const Value owner = ctx.get_raw("sys.contract." + id);
    if (owner.is_null()) throw ContractFailure("UnknownContract", id);
    if (!ctx.caller().is_user() || ctx.caller().id != owner.as_str()) {
      throw ContractFailure("NotOwner", ctx.caller().id + " does not own " + id);
    }
    try {
      policy::parse_policy(src);
    } catch (const policy::ParseError& e) {
      throw ContractFailure("ParseError", e.what());
    }
    ctx.put_raw("sys.policy." + id, Value::string(src));
    return Value::null();
  }
  throw ContractFailure("UnknownMethod", "sys." + method);
}

Receipt Chain::execute(const Transaction& t, std::uint32_t index, std::uint64_t h, std::uint64_t tick,
                       Overlay& block, std::vector<xbus::Event>& out_events) {
  Receipt rc;
  const bool is_sys = t.target_contract == kSysContract;
  const auto it = contracts_.find(t.target_contract);
  const bool system = is_sys || (it != contracts_.end() && it->second->is_system());
  TxnContext ctx(*this, t, t.target_contract, system, h, index, tick, block);
  try {
    if (is_sys) {
      rc.result = sys_call(ctx, t.method, t.args);
    } else {
      if (!ctx.contract_active(t.target_contract)) throw ContractFailure("UnknownContract", t.target_contract);
      Contract& c = *it->second;
      if (!c.is_system()) {
        auto req = c.access_request(t.method, t.args, t.caller);
        req.caller_id = t.caller.id;
        req.caller_chain = t.caller.chain;
        const auto d = ctx.check_access(t.target_contract, std::move(req));
        if (!d.allowed) throw ContractFailure("PolicyDenied", d.reason);
      }
      rc.result = c.call(ctx, t.method, t.args);
    }
    for (const auto& [k, v] : ctx.writes()) {
      rc.writes.emplace_back(k, v);
      block.values.insert_or_assign(k, v);
      block.entries.push_back({k, v, Version{h, index}});
    }
    for (auto& e : ctx.events()) {
      e.nonce = next_event_nonce_++;
      rc.events.push_back(e.digest());
      out_events.push_back(std::move(e));
    }
  } catch (const ContractFailure& e) {
    rc.status = TxnStatus::Failed;
    rc.error = e.what();
  } catch (const std::exception& e) {
    rc.status = TxnStatus::Failed;
    rc.error = std::string("Error: ") + e.what();
  }
  if (!rc.ok()) {
    rc.result = Value::null();
    rc.writes.clear();
    rc.events.clear();
  }
  rc.xtxn_id = ctx.xtxn();
  return rc;
}

std::optional<CertifiedBlock> Chain::produce_block(std::uint64_t tick) {
  if (!has_pending()) return std::nullopt;
  const std::uint64_t h = height() + 1;
  load_policies();

  CertifiedBlock cb;
  Block& b = cb.block;
  for (const auto& e : inbox_) b.txns.push_back(to_transaction(e));
  for (const auto& t : mempool_) b.txns.push_back(t);

  const std::uint64_t saved_nonce = next_event_nonce_;
  Overlay overlay;
  for (std::size_t i = 0; i < b.txns.size(); ++i) {
    b.receipts.push_back(execute(b.txns[i], static_cast<std::uint32_t>(i), h, tick, overlay, b.events));
  }

  std::map<std::string, Value> state(store_.current().begin(), store_.current().end());
  for (const auto& [k, v] : overlay.values) {
    if (v.is_null()) {
      state.erase(k);
    } else {
      state.insert_or_assign(k, v);
    }
  }
  auto amap = std::make_shared<const AuthenticatedMap>(state);

  std::vector<Digest> ids;
  for (const auto& t : b.txns) ids.push_back(t.txn_id);
  b.header.chain_id = cfg_.chain_id;
  b.header.height = h;
  b.header.prev_digest = blocks_.back().block.header.digest();
  b.header.txn_root = merkle::root_of(ids);
  b.header.state_root = amap->root();
  b.header.tick = tick;

  const Digest d = b.header.digest();
  cb.cert.header_digest = d;
  for (std::uint32_t i = 0; i < cfg_.n; ++i) {
    const std::string nid = node_id(i);
    Bytes sig;
    switch (behavior(nid)) {
      case Behavior::Silent: continue;
      case Behavior::EquivocateDigest: {
        const Digest wrong = Hasher().update(d).update("equivocate").finish();
        sig = scheme_->sign(cfg_.node_keys[i], wrong.span());
        break;
      }
      default: sig = scheme_->sign(cfg_.node_keys[i], d.span());
    }
    if (scheme_->verify(cfg_.node_keys[i].public_key, d.span(), sig)) {
      cb.cert.signatures.push_back({nid, std::move(sig)});
    }
  }
  if (cb.cert.signatures.size() < quorum()) {
    next_event_nonce_ = saved_nonce;
    ++stats_.quorum_failures;
    throw ChainError(ChainErrc::QuorumFailure,
                     std::to_string(cb.cert.signatures.size()) + " valid signatures at height " +
                         std::to_string(h) + ", need " + std::to_string(quorum()));
  }

  for (const auto& e : overlay.entries) store_.apply(e.key, e.value, e.version);
  inbox_.clear();
  mempool_.clear();
  latest_map_ = std::move(amap);
  for (std::size_t i = 0; i < b.txns.size(); ++i) {
    receipts_[b.txns[i].txn_id] = {h, static_cast<std::uint32_t>(i)};
    if (!b.receipts[i].ok()) ++stats_.failed;
  }
  ++stats_.blocks;
  stats_.txns += b.txns.size();
  blocks_.push_back(cb);
  return cb;
}

const CertifiedBlock& Chain::block(std::uint64_t h) const {
  if (h > height()) throw ChainError(ChainErrc::FutureHeight, std::to_string(h));
  return blocks_[h];
}

Value Chain::read_state(std::string_view key, std::optional<std::uint64_t> h) const {
  if (!h) return store_.get(key);
  if (*h > height()) throw ChainError(ChainErrc::FutureHeight, std::to_string(*h));
  return store_.get_at(key, *h);
}

std::vector<StateEntry> Chain::get_history(std::string_view prefix, std::uint64_t from,
                                           std::uint64_t to) const {
  if (from > to || to > height()) {
    throw ChainError(ChainErrc::InvalidRange, "[" + std::to_string(from) + ", " + std::to_string(to) + "]");
  }
  return store_.history(prefix, from, to);
}

MerkleProof Chain::get_proof(std::string_view key, std::uint64_t h) const {
  if (h > height()) throw ChainError(ChainErrc::FutureHeight, std::to_string(h));
  if (h == height()) return latest_map_->prove(key, h);
  return AuthenticatedMap(store_.snapshot_at(h)).prove(key, h);
}

policy::Decision Chain::check_access(const std::string& contract_id, policy::AccessRequest req) const {
  const Value src = store_.get("sys.policy." + contract_id);
  if (!src.is_str()) return policy::Decision::allow();
  req.height = height();
  auto ctx = eval_context(contract_id, height(), {req.caller_id, req.caller_chain}, nullptr, nullptr);
  return policy::evaluate(policy::parse_policy(src.as_str()), req, ctx);
}

Value Chain::aggregate(const CallerRef& caller, const std::string& contract_id,
                       const policy::AggExpr& agg) const {
  const auto d = check_access(contract_id, {caller.id, caller.chain, policy::Action::Read,
                                            policy::aggregate_resource(agg), height(), {}});
  if (!d.allowed) throw ChainError(ChainErrc::PolicyDenied, d.reason);
  return policy::eval_aggregate(agg, eval_context(contract_id, height(), caller, nullptr, nullptr));
}

std::optional<Chain::ReceiptRef> Chain::find_receipt(const Digest& txn_id) const {
  const auto it = receipts_.find(txn_id);
  if (it == receipts_.end()) return std::nullopt;
  return it->second;
}

bool Chain::verify_cert(const QuorumCert& qc) const {
  return count_valid_signatures(*scheme_, public_keys_, qc.header_digest.span(), qc.signatures) >= quorum();
}

}  // namespace interop::chain
