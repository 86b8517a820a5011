#include "interop/xchain/coordinator.hpp"

#include <algorithm>

namespace interop::xchain {

using chain::CallerRef;
using xbus::EventKind;
using xbus::SignedEventBatch;

std::string_view xerrc_name(XErrc c) {
  switch (c) {
    case XErrc::PolicyDenied: return "PolicyDenied";
    case XErrc::StaleQuorum: return "StaleQuorum";
    case XErrc::ProofInvalid: return "ProofInvalid";
    case XErrc::Timeout: return "Timeout";
    case XErrc::LockTimeout: return "LockTimeout";
    case XErrc::InvalidState: return "InvalidState";
  }
  return "?";
}

void verify_read_response(const xbus::KeyDirectory& keys, const ReadResponse& r, std::uint64_t expected_nonce) {
  auto stale = [](const std::string& why) { return XchainError(XErrc::StaleQuorum, why); };
  if (r.carrier) {
    const auto& b = *r.carrier;
    if (b.event.source_chain != r.chain || b.event.kind != static_cast<std::uint8_t>(EventKind::ReadResp)) {
      throw stale("carrier is not a read response from " + r.chain);
    }
    if (!keys.verify_batch(b)) throw stale("fewer than f+1 valid signatures");
    ReadResponseMsg m;
    try {
      m = decode_read_response(b.event.payload);
    } catch (const DecodeError& e) {
      throw stale(e.what());
    }
    if (m.nonce != expected_nonce || r.nonce != expected_nonce) throw stale("nonce mismatch");
    if (m.anchor_height != r.anchor_height || m.status != r.status) throw stale("response does not match carrier");
    if (!m.status.empty()) return;
    if (m.items.size() != r.keys.size() || r.values.size() != r.keys.size() || r.versions.size() != r.keys.size()) {
      throw stale("response does not match carrier");
    }
    for (std::size_t i = 0; i < m.items.size(); ++i) {
      if (m.items[i].key != r.keys[i] || m.items[i].value != r.values[i] || m.items[i].version != r.versions[i]) {
        throw stale("response does not match carrier");
      }
    }
    return;
  }
  if (r.proof && r.header && r.cert) {
    const auto* entry = keys.find(r.chain);
    if (!entry) throw stale("unknown chain " + r.chain);
    const Digest hd = r.header->digest();
    if (r.header->chain_id != r.chain || r.cert->header_digest != hd) throw stale("certificate does not match header");
    std::vector<xbus::NodeSignature> sigs;
    for (const auto& s : r.cert->signatures) sigs.push_back({s.node_id, s.signature});
    if (keys.valid_signers(r.chain, hd, sigs) < 2 * entry->f + 1) throw stale("fewer than 2f+1 header signatures");
    if (r.nonce != expected_nonce) throw stale("nonce mismatch");
    const auto& p = *r.proof;
    if (r.keys.size() != 1 || r.values.size() != 1 || p.leaf_key != r.keys[0] ||
        p.root_height != r.header->height || r.anchor_height != r.header->height) {
      throw XchainError(XErrc::ProofInvalid, "proof is for a different key or height");
    }
    if (!chain::verify_proof(r.header->state_root, p)) throw XchainError(XErrc::ProofInvalid, "proof does not verify");
    const Value proven = p.kind == chain::ProofKind::Membership ? *p.leaf_value : Value::null();
    if (proven != r.values[0]) throw XchainError(XErrc::ProofInvalid, "value differs from proof");
    return;
  }
  throw stale("no signatures or proof");
}

// ---------------------------------------------------------------- board

struct Coordinator::Board {
  std::string chain;
  std::set<std::uint64_t> wanted_reads;
  std::map<std::uint64_t, SignedEventBatch> responses;
  std::set<std::string> wanted_txns;
  std::map<std::string, std::map<std::string, SignedEventBatch>> votes;
  std::map<std::string, std::map<std::string, SignedEventBatch>> acks;

  void accept(const SignedEventBatch& b) {
    const auto& e = b.event;
    if (e.dest_chain != chain || e.dest_contract != kXtxn) return;
    try {
      const auto kind = static_cast<EventKind>(e.kind);
      if (kind == EventKind::ReadResp) {
        const auto m = decode_read_response(e.payload);
        if (wanted_reads.contains(m.nonce)) responses.emplace(m.nonce, b);
      } else if (kind == EventKind::GtVote || kind == EventKind::MtVote) {
        const auto v = decode_vote(e.payload);
        if (!wanted_txns.contains(v.txn_id)) return;
        auto& table = v.phase == VotePhase::Vote ? votes : acks;
        table[v.txn_id].emplace(e.source_chain, b);
      }
    } catch (const DecodeError&) {
    }
  }

  bool has_all(const std::map<std::string, std::map<std::string, SignedEventBatch>>& table,
               const std::string& txn, const std::vector<std::string>& chains) const {
    const auto it = table.find(txn);
    if (it == table.end()) return chains.empty();
    return std::all_of(chains.begin(), chains.end(), [&](const auto& c) { return it->second.contains(c); });
  }

  void forget(const std::string& txn) {
    wanted_txns.erase(txn);
    votes.erase(txn);
    acks.erase(txn);
  }
};

Coordinator::Coordinator(sim::World& world, std::string chain, std::string on_behalf, std::string owner,
                         XConfig cfg)
    : world_(world),
      chain_(std::move(chain)),
      on_behalf_(std::move(on_behalf)),
      owner_(std::move(owner)),
      cfg_(cfg),
      board_(std::make_shared<Board>()),
      next_nonce_(world.rng().next() >> 1) {
  board_->chain = chain_;
  std::weak_ptr<Board> weak = board_;
  world_.accept_observers.push_back([weak](const SignedEventBatch& b) {
    if (auto p = weak.lock()) p->accept(b);
  });
}

Coordinator::~Coordinator() = default;

std::string Coordinator::new_txn_id() {
  Hasher h;
  h.update(chain_).update("/").update(on_behalf_).update("/").update(std::to_string(counter_++));
  h.update("/").update(std::to_string(world_.rng().next()));
  return h.finish().hex().substr(0, 16);
}

Digest Coordinator::submit(const std::string& method, std::vector<Value> args) {
  return world_.chain(chain_).submit_call(CallerRef::user(owner_), std::string(kXtxn), method, std::move(args));
}

// ---------------------------------------------------------------- reads

sim::Task<ReadResponse> Coordinator::request(std::string meter_id, std::string chain, ReadRequestMsg req) {
  auto board = board_;
  auto& sched = world_.sched();
  const auto nonce = req.nonce;
  const Bytes payload = encode(req);
  board->wanted_reads.insert(nonce);
  for (std::uint32_t attempt = 0;; ++attempt) {
    submit("send", {Value::string(on_behalf_), Value::integer(static_cast<int>(EventKind::ReadReq)),
                    Value::string(chain), Value::bytes(payload)});
    auto& m = meter_.at(meter_id);
    if (attempt == 0) {
      ++m.round_trips;
    } else {
      ++m.retransmissions;
    }
    auto wait = sched.wait_until([board, nonce] { return board->responses.contains(nonce); },
                                 sched.now() + (cfg_.response_timeout << attempt));
    const bool got = co_await wait;
    if (got) break;
    if (attempt + 1 >= cfg_.retry_limit) {
      board->wanted_reads.erase(nonce);
      throw XchainError(XErrc::Timeout, "no read response from " + chain);
    }
  }
  board->wanted_reads.erase(nonce);
  auto node = board->responses.extract(nonce);
  const SignedEventBatch& b = node.mapped();
  const auto msg = decode_read_response(b.event.payload);
  ReadResponse r;
  r.chain = chain;
  r.nonce = msg.nonce;
  r.anchor_height = msg.anchor_height;
  r.status = msg.status;
  for (const auto& it : msg.items) {
    r.keys.push_back(it.key);
    r.values.push_back(it.value);
    r.versions.push_back(it.version);
  }
  r.carrier = b;
  verify_read_response(world_.keys(), r, nonce);
  if (r.status.empty() && r.keys != req.keys) throw XchainError(XErrc::StaleQuorum, "response keys differ");
  co_return r;
}

sim::Task<ReadResponse> Coordinator::verified_read(std::string chain, std::vector<std::string> keys) {
  const auto nonce = next_nonce_++;
  ReadRequestMsg req{nonce, {}, false, std::move(keys)};
  const std::string id = "read-" + std::to_string(nonce);
  meter_.at(id).kind = "read";
  auto task = request(id, std::move(chain), std::move(req));
  auto r = co_await task;
  if (r.status.starts_with("PolicyDenied")) throw XchainError(XErrc::PolicyDenied, r.status);
  if (!r.status.empty()) throw XchainError(XErrc::InvalidState, r.status);
  co_return r;
}

ReadResponse Coordinator::storage_read(const std::string& chain, const std::string& key, std::uint32_t node) {
  auto& c = world_.chain(chain);
  const auto [contract, rest] = split_key(key);
  const auto d = c.check_access(contract, {on_behalf_, chain_, policy::Action::Read, rest, 0, {}});
  if (!d.allowed) throw XchainError(XErrc::PolicyDenied, d.reason);
  const auto beh = c.behavior(c.node_id(node));
  if (beh == chain::Behavior::Silent) throw XchainError(XErrc::Timeout, c.node_id(node) + " did not answer");

  const auto h = c.height();
  const auto& cb = c.block(h);
  ReadResponse r;
  r.chain = chain;
  r.keys = {key};
  r.nonce = next_nonce_++;
  r.anchor_height = h;
  r.proof = c.get_proof(key, h);
  r.header = cb.block.header;
  r.cert = cb.cert;
  r.values = {r.proof->kind == chain::ProofKind::Membership ? *r.proof->leaf_value : Value::null()};
  r.versions = {c.store().version(key)};
  if (beh != chain::Behavior::Honest) {
    // A lying node substitutes the value and the leaf it claims to prove.
    r.values[0] = Value::string("forged");
    if (r.proof->kind == chain::ProofKind::Membership) r.proof->leaf_value = r.values[0];
  }
  verify_read_response(world_.keys(), r, r.nonce);
  return r;
}

// ---------------------------------------------------------------- general transactions

GeneralTxn Coordinator::begin(Mode mode) {
  if (mode == Mode::Mini) throw XchainError(XErrc::InvalidState, "mini-transactions use execute_minitxn");
  GeneralTxn t;
  t.txn_id = new_txn_id();
  t.mode = mode;
  meter_.at(t.txn_id).kind = std::string(mode_name(mode));
  return t;
}

void Coordinator::fail(GeneralTxn& t, const std::string& reason) {
  t.state = TxnState::Aborted;
  t.abort_reason = reason;
  auto& m = meter_.at(t.txn_id);
  m.outcome = "aborted";
  m.reason = reason;
}

sim::Task<ReadResponseMsg> Coordinator::lock_request(GeneralTxn& t, std::string chain,
                                                     std::vector<std::string> keys) {
  std::optional<std::uint64_t> blocked_since;
  auto& sched = world_.sched();
  while (true) {
    ReadRequestMsg req{next_nonce_++, t.txn_id, true, keys};
    std::optional<XchainError> err;
    ReadResponse r;
    try {
      auto task = request(t.txn_id, chain, std::move(req));
      r = co_await task;
    } catch (const XchainError& e) {
      err = e;
    }
    if (err) {
      auto abort = txn_abort(t, err->what());
      co_await abort;
      throw *err;
    }
    if (r.status.empty()) {
      ReadResponseMsg out;
      out.nonce = r.nonce;
      out.anchor_height = r.anchor_height;
      for (std::size_t i = 0; i < r.keys.size(); ++i) out.items.push_back({r.keys[i], r.values[i], r.versions[i]});
      co_return out;
    }
    if (r.status == "Locked") {
      if (!blocked_since) blocked_since = sched.now();
      if (sched.now() - *blocked_since >= cfg_.lock_timeout) {
        auto abort = txn_abort(t, "LockTimeout");
        co_await abort;
        throw XchainError(XErrc::LockTimeout, "waiting on " + chain);
      }
      auto nap = sched.sleep(cfg_.lock_retry_delay);
      co_await nap;
      continue;
    }
    auto abort = txn_abort(t, r.status);
    co_await abort;
    throw XchainError(r.status.starts_with("PolicyDenied") ? XErrc::PolicyDenied : XErrc::InvalidState, r.status);
  }
}

sim::Task<std::vector<Value>> Coordinator::txn_read_many(GeneralTxn& t, std::string chain,
                                                         std::vector<std::string> keys) {
  if (t.state != TxnState::Active) throw XchainError(XErrc::InvalidState, "transaction is not active");
  std::vector<Value> out(keys.size());
  std::vector<std::string> fetch;
  std::vector<std::size_t> slot;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto w = t.write_set.find({chain, keys[i]});
    if (w != t.write_set.end()) {
      out[i] = w->second;
    } else {
      fetch.push_back(keys[i]);
      slot.push_back(i);
    }
  }
  if (fetch.empty()) co_return out;
  t.touched.insert(chain);

  std::vector<ReadItem> items;
  if (t.mode == Mode::Locks) {
    auto task = lock_request(t, chain, fetch);
    auto m = co_await task;
    items = std::move(m.items);
  } else {
    std::optional<XchainError> err;
    ReadResponse r;
    try {
      ReadRequestMsg req{next_nonce_++, t.txn_id, false, fetch};
      auto task = request(t.txn_id, chain, std::move(req));
      r = co_await task;
    } catch (const XchainError& e) {
      err = e;
    }
    if (!err && !r.status.empty()) {
      err = XchainError(r.status.starts_with("PolicyDenied") ? XErrc::PolicyDenied : XErrc::InvalidState, r.status);
    }
    if (err) {
      auto abort = txn_abort(t, err->what());
      co_await abort;
      throw *err;
    }
    for (std::size_t i = 0; i < r.keys.size(); ++i) items.push_back({r.keys[i], r.values[i], r.versions[i]});
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    const ChainKey ck{chain, items[j].key};
    out[slot[j]] = items[j].value;
    t.read_set.emplace(ck, items[j].version);
    if (t.mode == Mode::Locks) t.locked.insert(ck);
  }
  co_return out;
}

sim::Task<Value> Coordinator::txn_read(GeneralTxn& t, std::string chain, std::string key) {
  std::vector<std::string> keys{std::move(key)};
  auto task = txn_read_many(t, std::move(chain), std::move(keys));
  auto v = co_await task;
  co_return v.at(0);
}

sim::Task<void> Coordinator::txn_write(GeneralTxn& t, std::string chain, std::string key, Value v) {
  if (t.state != TxnState::Active) throw XchainError(XErrc::InvalidState, "transaction is not active");
  t.touched.insert(chain);
  ChainKey ck{chain, key};
  if (t.mode == Mode::Locks && !t.locked.contains(ck)) {
    std::vector<std::string> keys{key};
    auto task = lock_request(t, chain, std::move(keys));
    co_await task;
    t.locked.insert(ck);
  }
  t.write_set[ck] = std::move(v);
}

sim::Task<void> Coordinator::await_acks(std::string txn, std::vector<std::string> chains) {
  auto board = board_;
  auto& sched = world_.sched();
  for (std::uint32_t attempt = 0;; ++attempt) {
    auto wait = sched.wait_until([board, txn, chains] { return board->has_all(board->acks, txn, chains); },
                                 sched.now() + (cfg_.response_timeout << attempt));
    const bool got = co_await wait;
    if (got) co_return;
    if (attempt + 1 >= cfg_.retry_limit) {
      meter_.at(txn).reason += meter_.at(txn).reason.empty() ? "unacknowledged" : "; unacknowledged";
      co_return;
    }
    const auto it = board->acks.find(txn);
    for (const auto& c : chains) {
      if (it != board->acks.end() && it->second.contains(c)) continue;
      submit("resend", {Value::string(on_behalf_), Value::string(txn), Value::string(c)});
      ++meter_.at(txn).retransmissions;
    }
  }
}

sim::Task<Coordinator::PhaseResult> Coordinator::two_phase(std::string txn, Mode mode,
                                                           std::vector<std::pair<std::string, PrepareMsg>> parts) {
  auto board = board_;
  auto& sched = world_.sched();
  board->wanted_txns.insert(txn);
  std::vector<std::string> chains;
  std::vector<std::pair<std::string, Bytes>> payloads;
  for (const auto& [c, p] : parts) {
    chains.push_back(c);
    payloads.emplace_back(c, encode(p));
  }
  submit("prepare", {Value::string(on_behalf_), Value::string(txn), Value::integer(static_cast<int>(mode)),
                     Value::bytes(encode_pairs(payloads))});
  ++meter_.at(txn).round_trips;

  for (std::uint32_t attempt = 0;; ++attempt) {
    auto wait = sched.wait_until([board, txn, chains] { return board->has_all(board->votes, txn, chains); },
                                 sched.now() + (cfg_.response_timeout << attempt));
    const bool got = co_await wait;
    if (got || attempt + 1 >= cfg_.retry_limit) break;
    const auto it = board->votes.find(txn);
    for (const auto& c : chains) {
      if (it != board->votes.end() && it->second.contains(c)) continue;
      submit("resend", {Value::string(on_behalf_), Value::string(txn), Value::string(c)});
      ++meter_.at(txn).retransmissions;
    }
  }

  PhaseResult out;
  bool want = true;
  std::vector<std::pair<std::string, Bytes>> batches;
  const auto vit = board->votes.find(txn);
  for (const auto& c : chains) {
    const SignedEventBatch* b = nullptr;
    if (vit != board->votes.end()) {
      const auto f = vit->second.find(c);
      if (f != vit->second.end()) b = &f->second;
    }
    if (!b) {
      want = false;
      if (out.reason.empty()) out.reason = "VoteTimeout: " + c;
      continue;
    }
    auto v = decode_vote(b->event.payload);
    if (!v.yes) {
      want = false;
      if (out.reason.empty()) out.reason = v.reason;
    }
    batches.emplace_back(c, xbus::encode_batch(*b));
    out.votes.emplace(c, std::move(v));
  }

  const auto d = submit("decide", {Value::string(on_behalf_), Value::string(txn), Value::boolean(want),
                                   Value::bytes(encode_pairs(batches))});
  ++meter_.at(txn).round_trips;
  auto& home = world_.chain(chain_);
  auto decided = sched.wait_until([&home, d] { return home.find_receipt(d).has_value(); }, ~std::uint64_t{0});
  co_await decided;
  const auto ref = *home.find_receipt(d);
  const auto& rc = home.block(ref.height).block.receipts.at(ref.index);
  if (!rc.ok()) throw XchainError(XErrc::InvalidState, "decide failed: " + rc.error);
  out.committed = rc.result.as_bool();
  if (want && !out.committed) out.reason = "VoteQuorumFailure";

  auto acks = await_acks(txn, chains);
  co_await acks;
  board->forget(txn);
  co_return out;
}

sim::Task<CommitOutcome> Coordinator::txn_commit(GeneralTxn& t) {
  if (t.state != TxnState::Active) throw XchainError(XErrc::InvalidState, "transaction is not active");
  auto& m = meter_.at(t.txn_id);
  if (t.touched.empty()) {
    t.state = TxnState::Committed;
    m.outcome = "committed";
    co_return CommitOutcome{true, {}};
  }
  std::map<std::string, PrepareMsg> by_chain;
  for (const auto& c : t.touched) by_chain[c] = PrepareMsg{t.txn_id, t.mode, {}, {}, {}};
  for (const auto& [ck, ver] : t.read_set) by_chain[ck.first].reads.emplace_back(ck.second, ver);
  for (const auto& [ck, v] : t.write_set) by_chain[ck.first].writes.emplace_back(ck.second, v);
  std::vector<std::pair<std::string, PrepareMsg>> parts(by_chain.begin(), by_chain.end());

  t.state = TxnState::Prepared;
  auto task = two_phase(t.txn_id, t.mode, std::move(parts));
  auto pr = co_await task;
  t.state = pr.committed ? TxnState::Committed : TxnState::Aborted;
  t.abort_reason = pr.reason;
  auto& m2 = meter_.at(t.txn_id);
  m2.outcome = pr.committed ? "committed" : "aborted";
  if (!pr.committed) m2.reason = pr.reason;
  co_return CommitOutcome{pr.committed, pr.reason};
}

sim::Task<void> Coordinator::txn_abort(GeneralTxn& t, std::string reason) {
  if (t.state == TxnState::Committed || t.state == TxnState::Aborted) co_return;
  fail(t, reason);
  if (t.touched.empty()) co_return;
  board_->wanted_txns.insert(t.txn_id);
  std::vector<std::pair<std::string, Bytes>> listed;
  std::vector<std::string> chains;
  for (const auto& c : t.touched) {
    listed.emplace_back(c, Bytes{});
    chains.push_back(c);
  }
  submit("abort", {Value::string(on_behalf_), Value::string(t.txn_id), Value::integer(static_cast<int>(t.mode)),
                   Value::bytes(encode_pairs(listed))});
  ++meter_.at(t.txn_id).round_trips;
  auto acks = await_acks(t.txn_id, chains);
  co_await acks;
  board_->forget(t.txn_id);
}

// ---------------------------------------------------------------- mini-transactions

sim::Task<MiniOutcome> Coordinator::execute_minitxn(MiniTxn mt) {
  MiniOutcome out;
  out.txn_id = new_txn_id();
  meter_.at(out.txn_id).kind = "mini";
  std::map<std::string, PrepareMsg> by_chain;
  auto part = [&](const std::string& c) -> PrepareMsg& {
    auto& p = by_chain[c];
    p.txn_id = out.txn_id;
    p.mode = Mode::Mini;
    return p;
  };
  for (const auto& [c, k, v] : mt.compares) part(c).compares.emplace_back(k, v);
  for (const auto& [c, k] : mt.reads) part(c).reads.emplace_back(k, std::nullopt);
  for (const auto& [c, k, v] : mt.writes) part(c).writes.emplace_back(k, v);
  if (by_chain.empty()) {
    out.committed = true;
    meter_.at(out.txn_id).outcome = "committed";
    co_return out;
  }
  std::vector<std::pair<std::string, PrepareMsg>> parts(by_chain.begin(), by_chain.end());
  auto task = two_phase(out.txn_id, Mode::Mini, std::move(parts));
  auto pr = co_await task;
  out.committed = pr.committed;
  out.reason = pr.reason;
  for (const auto& [c, v] : pr.votes) {
    for (const auto& it : v.reads) out.reads[{c, it.key}] = it.value;
  }
  auto& m = meter_.at(out.txn_id);
  m.outcome = pr.committed ? "committed" : "aborted";
  if (!pr.committed) m.reason = pr.reason;
  co_return out;
}

}  // namespace interop::xchain
