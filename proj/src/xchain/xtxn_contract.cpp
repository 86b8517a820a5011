#include "interop/xchain/xtxn_contract.hpp"

#include <algorithm>

namespace interop::xchain {

using chain::ContractFailure;
using chain::ExecContext;
using chain::Value;
using xbus::EventKind;

namespace {

std::string xkey(std::string_view table, const std::string& rest) {
  return std::string(kXtxn) + "." + std::string(table) + "." + rest;
}

std::uint8_t kind_byte(EventKind k) { return static_cast<std::uint8_t>(k); }

EventKind prepare_kind(Mode m) { return m == Mode::Mini ? EventKind::MtPrepare : EventKind::GtPrepare; }
EventKind decide_kind(Mode m) { return m == Mode::Mini ? EventKind::MtDecide : EventKind::GtDecide; }
EventKind vote_kind(Mode m) { return m == Mode::Mini ? EventKind::MtVote : EventKind::GtVote; }

void emit(ExecContext& ctx, const std::string& dest, const std::string& source_contract, EventKind kind,
          Bytes payload) {
  xbus::Event e;
  e.dest_chain = dest;
  e.dest_contract = std::string(kXtxn);
  e.source_contract = source_contract;
  e.kind = kind_byte(kind);
  e.payload = std::move(payload);
  ctx.emit(std::move(e));
}

void require_owner(ExecContext& ctx, const std::string& on_behalf) {
  const Value owner = ctx.get_raw("sys.contract." + on_behalf);
  if (!ctx.caller().is_user() || !owner.is_str() || owner.as_str() != ctx.caller().id) {
    throw ContractFailure("NotOwner", ctx.caller().id + " does not own " + on_behalf);
  }
}

template <typename F>
auto decode_or_fail(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DecodeError& e) {
    throw ContractFailure("BadMessage", e.what());
  }
}

std::string caller_tag(const chain::CallerRef& c) { return c.chain + "/" + c.id; }

// ---------------------------------------------------------------- participant

std::string access_reason(ExecContext& ctx, const std::string& key, policy::Action action) {
  const auto [contract, rest] = split_key(key);
  if (rest.empty()) return "PolicyDenied: malformed key " + key;
  if (contract == kXtxn || contract == chain::kSysContract) {
    return action == policy::Action::Read ? "" : "PolicyDenied: reserved namespace " + contract;
  }
  if (!ctx.contract_active(contract)) return "PolicyDenied: unknown contract " + contract;
  const auto d = ctx.check_access(contract, {ctx.caller().id, ctx.caller().chain, action, rest, 0, {}});
  return d.allowed ? "" : "PolicyDenied: " + d.reason;
}

Value lock_holder(ExecContext& ctx, const std::string& key) { return ctx.get_raw(lock_key(key)); }

void remember_coordinator(ExecContext& ctx, const std::string& txn) {
  const auto k = xkey("coord", txn);
  if (ctx.get_raw(k).is_null()) ctx.put_raw(k, Value::string(caller_tag(ctx.caller())));
}

bool is_done(ExecContext& ctx, const std::string& txn) { return !ctx.get_raw(xkey("done", txn)).is_null(); }

void on_read_request(ExecContext& ctx, std::span<const std::uint8_t> payload) {
  const auto req = decode_or_fail([&] { return decode_read_request(payload); });
  ReadResponseMsg resp;
  resp.nonce = req.nonce;
  resp.anchor_height = ctx.height();
  if (req.lock && req.txn_id.empty()) {
    resp.status = "BadRequest: lock without transaction";
  } else if (!req.txn_id.empty() && is_done(ctx, req.txn_id)) {
    resp.status = "Decided";
  }
  for (const auto& key : req.keys) {
    if (!resp.status.empty()) break;
    resp.status = access_reason(ctx, key, policy::Action::Read);
  }
  if (resp.status.empty() && req.lock) {
    for (const auto& key : req.keys) {
      const Value h = lock_holder(ctx, key);
      if (!h.is_null() && h != Value::string(req.txn_id)) {
        resp.status = "Locked";
        break;
      }
    }
    if (resp.status.empty()) {
      for (const auto& key : req.keys) ctx.put_raw(lock_key(key), Value::string(req.txn_id));
      remember_coordinator(ctx, req.txn_id);
    }
  }
  if (resp.status.empty()) {
    for (const auto& key : req.keys) resp.items.push_back({key, ctx.get_raw(key), ctx.version_raw(key)});
  }
  if (!req.txn_id.empty()) ctx.tag_xtxn(req.txn_id);
  emit(ctx, ctx.caller().chain, std::string(kXtxn), EventKind::ReadResp, encode(resp));
}

std::vector<std::string> all_keys(const PrepareMsg& m) {
  std::vector<std::string> keys;
  for (const auto& [k, v] : m.compares) keys.push_back(k);
  for (const auto& [k, v] : m.reads) keys.push_back(k);
  for (const auto& [k, v] : m.writes) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

std::string validate_prepare(ExecContext& ctx, const PrepareMsg& m) {
  for (const auto& [k, v] : m.compares) {
    if (auto r = access_reason(ctx, k, policy::Action::Read); !r.empty()) return r;
  }
  for (const auto& [k, v] : m.reads) {
    if (auto r = access_reason(ctx, k, policy::Action::Read); !r.empty()) return r;
  }
  for (const auto& [k, v] : m.writes) {
    if (auto r = access_reason(ctx, k, policy::Action::Write); !r.empty()) return r;
  }
  const Value mine = Value::string(m.txn_id);
  for (const auto& key : all_keys(m)) {
    const Value h = lock_holder(ctx, key);
    if (m.mode == Mode::Locks) {
      if (h != mine) return "LockLost: " + key;
    } else if (!h.is_null() && h != mine) {
      return "LockConflict: " + key;
    }
  }
  if (m.mode == Mode::Occ) {
    for (const auto& [k, v] : m.reads) {
      if (ctx.version_raw(k) != v) return "VersionConflict: " + k;
    }
  }
  for (const auto& [k, v] : m.compares) {
    if (ctx.get_raw(k) != v) return "CompareFailed: " + ctx.chain_id() + ":" + k;
  }
  return {};
}

void on_prepare(ExecContext& ctx, std::span<const std::uint8_t> payload) {
  const auto m = decode_or_fail([&] { return decode_prepare(payload); });
  ctx.tag_xtxn(m.txn_id);
  const auto voted_key = xkey("voted", m.txn_id);
  if (const Value prior = ctx.get_raw(voted_key); prior.is_bytes()) {
    emit(ctx, ctx.caller().chain, std::string(kXtxn), vote_kind(m.mode), prior.as_bytes());
    return;
  }
  VoteMsg v;
  v.txn_id = m.txn_id;
  v.reason = is_done(ctx, m.txn_id) ? "Decided" : validate_prepare(ctx, m);
  v.yes = v.reason.empty();
  if (v.yes) {
    for (const auto& key : all_keys(m)) ctx.put_raw(lock_key(key), Value::string(m.txn_id));
    ctx.put_raw(xkey("prep", m.txn_id), Value::bytes(Bytes(payload.begin(), payload.end())));
    remember_coordinator(ctx, m.txn_id);
    if (m.mode == Mode::Mini) {
      for (const auto& [k, ver] : m.reads) v.reads.push_back({k, ctx.get_raw(k), ctx.version_raw(k)});
    }
  }
  const Bytes body = encode(v);
  if (v.reason != "Decided") ctx.put_raw(voted_key, Value::bytes(body));
  emit(ctx, ctx.caller().chain, std::string(kXtxn), vote_kind(m.mode), body);
}

void release_locks(ExecContext& ctx, const std::string& txn) {
  const Value mine = Value::string(txn);
  for (const auto& [k, v] : ctx.scan_raw(chain::kLockPrefix)) {
    if (v == mine) ctx.put_raw(k, Value::null());
  }
}

void on_decide(ExecContext& ctx, EventKind kind, std::span<const std::uint8_t> payload) {
  const auto d = decode_or_fail([&] { return decode_decide(payload); });
  ctx.tag_xtxn(d.txn_id);
  const Value coord = ctx.get_raw(xkey("coord", d.txn_id));
  if (!coord.is_null() && coord != Value::string(caller_tag(ctx.caller()))) {
    throw ContractFailure("NotCoordinator", caller_tag(ctx.caller()));
  }
  const auto done_key = xkey("done", d.txn_id);
  Value done = ctx.get_raw(done_key);
  if (done.is_null()) {
    if (d.commit) {
      const Value prep = ctx.get_raw(xkey("prep", d.txn_id));
      if (!prep.is_bytes()) throw ContractFailure("NotPrepared", d.txn_id);
      const auto m = decode_or_fail([&] { return decode_prepare(prep.as_bytes()); });
      for (const auto& [k, v] : m.writes) ctx.put_raw(k, v);
    }
    release_locks(ctx, d.txn_id);
    ctx.put_raw(xkey("prep", d.txn_id), Value::null());
    done = Value::integer(d.commit ? 1 : 2);
    ctx.put_raw(done_key, done);
  }
  VoteMsg ack;
  ack.txn_id = d.txn_id;
  ack.phase = VotePhase::Ack;
  ack.yes = done.as_int() == 1;
  const auto reply = kind == EventKind::MtDecide ? EventKind::MtVote : EventKind::GtVote;
  emit(ctx, ctx.caller().chain, std::string(kXtxn), reply, encode(ack));
}

// ---------------------------------------------------------------- coordinator

void on_vote(ExecContext& ctx, std::span<const std::uint8_t> payload) {
  const auto v = decode_or_fail([&] { return decode_vote(payload); });
  if (ctx.get_raw(xkey("rec", v.txn_id)).is_null()) return;
  ctx.tag_xtxn(v.txn_id);
  const auto table = v.phase == VotePhase::Vote ? "vote" : "ack";
  const auto k = xkey(table, v.txn_id + "." + ctx.caller().chain);
  if (ctx.get_raw(k).is_null()) ctx.put_raw(k, Value::bytes(Bytes(payload.begin(), payload.end())));
}

TwoPCRecord load_record(ExecContext& ctx, const std::string& txn, const std::string& on_behalf) {
  const Value raw = ctx.get_raw(xkey("rec", txn));
  if (!raw.is_bytes()) throw ContractFailure("UnknownTxn", txn);
  auto rec = decode_or_fail([&] { return decode_record(raw.as_bytes()); });
  if (rec.on_behalf != on_behalf) throw ContractFailure("NotOwner", txn);
  return rec;
}

void store_record(ExecContext& ctx, const TwoPCRecord& rec) {
  ctx.put_raw(xkey("rec", rec.txn_id), Value::bytes(encode(rec)));
}

void emit_decide(ExecContext& ctx, const TwoPCRecord& rec, const std::string& chain) {
  emit(ctx, chain, rec.on_behalf, decide_kind(rec.mode),
       encode(DecideMsg{rec.txn_id, rec.phase == Phase::Commit}));
}

/// True iff `raw` is a signed yes vote for `txn` from `chain` to `here`.
bool verified_yes(const xbus::KeyDirectory& keys, const Bytes& raw, const std::string& txn,
                  const std::string& chain, const std::string& here, Mode mode) {
  try {
    const auto b = xbus::decode_batch(raw);
    if (b.event.source_chain != chain || b.event.dest_chain != here ||
        b.event.kind != kind_byte(vote_kind(mode))) {
      return false;
    }
    const auto v = decode_vote(b.event.payload);
    if (v.txn_id != txn || v.phase != VotePhase::Vote || !v.yes) return false;
    return keys.verify_batch(b);
  } catch (const DecodeError&) {
    return false;
  }
}

Mode arg_mode(const std::vector<Value>& args, std::size_t i) {
  const auto m = chain::arg_int(args, i);
  if (m < 0 || m > 2) throw ContractFailure("BadArgs", "mode");
  return static_cast<Mode>(m);
}

const Bytes& arg_bytes(const std::vector<Value>& args, std::size_t i) {
  const Value& v = chain::arg(args, i);
  if (!v.is_bytes()) throw ContractFailure("BadArgs", "argument " + std::to_string(i) + " is not bytes");
  return v.as_bytes();
}

}  // namespace

Value XtxnContract::call(ExecContext& ctx, const std::string& method, const std::vector<Value>& args) {
  if (method == "on_message") {
    if (ctx.caller().is_user()) throw ContractFailure("NotAnEvent", method);
    const auto kind = static_cast<EventKind>(chain::arg_int(args, 0));
    const Bytes& payload = arg_bytes(args, 1);
    switch (kind) {
      case EventKind::ReadReq: on_read_request(ctx, payload); break;
      case EventKind::MtPrepare:
      case EventKind::GtPrepare: on_prepare(ctx, payload); break;
      case EventKind::MtDecide:
      case EventKind::GtDecide: on_decide(ctx, kind, payload); break;
      case EventKind::MtVote:
      case EventKind::GtVote: on_vote(ctx, payload); break;
      case EventKind::ReadResp: break;
      default: throw ContractFailure("BadMessage", "unknown kind");
    }
    return Value::null();
  }

  const std::string& on_behalf = chain::arg_str(args, 0);
  require_owner(ctx, on_behalf);

  if (method == "send") {
    const auto kind = static_cast<EventKind>(chain::arg_int(args, 1));
    if (kind != EventKind::ReadReq) throw ContractFailure("BadArgs", "only read requests are sent directly");
    const Bytes& payload = arg_bytes(args, 3);
    const auto req = decode_or_fail([&] { return decode_read_request(payload); });
    if (!req.txn_id.empty()) ctx.tag_xtxn(req.txn_id);
    emit(ctx, chain::arg_str(args, 2), on_behalf, kind, payload);
    return Value::null();
  }

  const std::string& txn = chain::arg_str(args, 1);
  ctx.tag_xtxn(txn);

  if (method == "prepare") {
    if (!ctx.get_raw(xkey("rec", txn)).is_null()) throw ContractFailure("DuplicateTxn", txn);
    TwoPCRecord rec;
    rec.txn_id = txn;
    rec.on_behalf = on_behalf;
    rec.mode = arg_mode(args, 2);
    rec.participants = decode_or_fail([&] { return decode_pairs(arg_bytes(args, 3)); });
    if (rec.participants.empty()) throw ContractFailure("BadArgs", "no participants");
    store_record(ctx, rec);
    for (const auto& [c, p] : rec.participants) emit(ctx, c, on_behalf, prepare_kind(rec.mode), p);
    return Value::null();
  }

  if (method == "decide") {
    auto rec = load_record(ctx, txn, on_behalf);
    if (rec.phase != Phase::Prepare) return Value::boolean(rec.phase == Phase::Commit);
    bool commit = chain::arg(args, 2).is_bool() && chain::arg(args, 2).as_bool();
    const auto batches = decode_or_fail([&] { return decode_pairs(arg_bytes(args, 3)); });
    for (const auto& [c, payload] : rec.participants) {
      const auto it = std::find_if(batches.begin(), batches.end(), [&](const auto& b) { return b.first == c; });
      TwoPCRecord::Vote v{c, false, {}};
      if (it != batches.end()) {
        v.batch = it->second;
        v.yes = verified_yes(*keys_, it->second, txn, c, ctx.chain_id(), rec.mode);
      }
      commit = commit && v.yes;
      rec.votes.push_back(std::move(v));
    }
    rec.phase = commit ? Phase::Commit : Phase::Abort;
    store_record(ctx, rec);
    for (const auto& [c, p] : rec.participants) emit_decide(ctx, rec, c);
    return Value::boolean(commit);
  }

  if (method == "abort") {
    const auto listed = decode_or_fail([&] { return decode_pairs(arg_bytes(args, 3)); });
    TwoPCRecord rec;
    if (const Value raw = ctx.get_raw(xkey("rec", txn)); raw.is_bytes()) {
      rec = load_record(ctx, txn, on_behalf);
      if (rec.phase != Phase::Prepare) return Value::boolean(rec.phase == Phase::Commit);
    } else {
      rec.txn_id = txn;
      rec.on_behalf = on_behalf;
      rec.mode = arg_mode(args, 2);
    }
    for (const auto& [c, p] : listed) {
      const bool known = std::any_of(rec.participants.begin(), rec.participants.end(),
                                     [&](const auto& q) { return q.first == c; });
      if (!known) rec.participants.emplace_back(c, Bytes{});
    }
    rec.phase = Phase::Abort;
    store_record(ctx, rec);
    for (const auto& [c, p] : rec.participants) emit_decide(ctx, rec, c);
    return Value::boolean(false);
  }

  if (method == "resend") {
    const auto rec = load_record(ctx, txn, on_behalf);
    const std::string& target = chain::arg_str(args, 2);
    const auto it = std::find_if(rec.participants.begin(), rec.participants.end(),
                                 [&](const auto& q) { return q.first == target; });
    if (it == rec.participants.end()) throw ContractFailure("BadArgs", "not a participant: " + target);
    if (rec.phase == Phase::Prepare) {
      emit(ctx, target, on_behalf, prepare_kind(rec.mode), it->second);
    } else {
      emit_decide(ctx, rec, target);
    }
    return Value::null();
  }

  throw ContractFailure("UnknownMethod", "xtxn." + method);
}

void install_xtxn(chain::Chain& c, std::shared_ptr<const xbus::KeyDirectory> keys) {
  c.install_system_contract(std::make_shared<XtxnContract>(std::move(keys)));
}

}  // namespace interop::xchain
