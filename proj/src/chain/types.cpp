#include "interop/chain/types.hpp"

namespace interop::chain {

namespace {

void encode_body(ByteWriter& w, const Transaction& t) {
  w.str(t.caller.id);
  w.str(t.caller.chain);
  w.str(t.target_contract);
  w.str(t.method);
  w.u32(static_cast<std::uint32_t>(t.args.size()));
  for (const auto& a : t.args) encode_value(w, a);
  w.u64(t.nonce);
}

void encode_header(ByteWriter& w, const BlockHeader& h) {
  w.str(h.chain_id);
  w.u64(h.height);
  w.raw(h.prev_digest.span());
  w.raw(h.txn_root.span());
  w.raw(h.state_root.span());
  w.u64(h.tick);
}

Digest read_digest(ByteReader& r) { return Digest::from_span(r.raw(32)); }

}  // namespace

Digest Transaction::compute_id() const {
  ByteWriter w;
  encode_body(w, *this);
  return sha256(w.data());
}

Transaction Transaction::make(CallerRef caller, std::string target, std::string method,
                              std::vector<Value> args, std::uint64_t nonce) {
  Transaction t;
  t.caller = std::move(caller);
  t.target_contract = std::move(target);
  t.method = std::move(method);
  t.args = std::move(args);
  t.nonce = nonce;
  t.txn_id = t.compute_id();
  return t;
}

Bytes encode_transaction(const Transaction& t) {
  ByteWriter w;
  encode_body(w, t);
  return std::move(w).take();
}

Transaction decode_transaction(ByteReader& r) {
  Transaction t;
  t.caller.id = r.str();
  t.caller.chain = r.str();
  t.target_contract = r.str();
  t.method = r.str();
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("argument count exceeds input");
  for (std::uint32_t i = 0; i < n; ++i) t.args.push_back(decode_value(r));
  t.nonce = r.u64();
  t.txn_id = t.compute_id();
  return t;
}

Bytes encode_header(const BlockHeader& h) {
  ByteWriter w;
  encode_header(w, h);
  return std::move(w).take();
}

Digest BlockHeader::digest() const { return sha256(encode_header(*this)); }

Bytes encode_block(const CertifiedBlock& cb) {
  const Block& b = cb.block;
  ByteWriter w;
  encode_header(w, b.header);
  w.u32(static_cast<std::uint32_t>(b.txns.size()));
  for (std::size_t i = 0; i < b.txns.size(); ++i) {
    encode_body(w, b.txns[i]);
    const Receipt& rc = b.receipts[i];
    w.u8(static_cast<std::uint8_t>(rc.status));
    w.str(rc.error);
    encode_value(w, rc.result);
    w.u32(static_cast<std::uint32_t>(rc.writes.size()));
    for (const auto& [k, v] : rc.writes) {
      w.str(k);
      encode_value(w, v);
    }
    w.str(rc.xtxn_id);
    w.u32(static_cast<std::uint32_t>(rc.events.size()));
    for (const auto& d : rc.events) w.raw(d.span());
  }
  w.u32(static_cast<std::uint32_t>(b.events.size()));
  for (const auto& e : b.events) xbus::encode_event(w, e);
  w.raw(cb.cert.header_digest.span());
  w.u32(static_cast<std::uint32_t>(cb.cert.signatures.size()));
  for (const auto& s : cb.cert.signatures) {
    w.str(s.node_id);
    w.bytes(s.signature);
  }
  return std::move(w).take();
}

CertifiedBlock decode_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  CertifiedBlock cb;
  Block& b = cb.block;
  b.header.chain_id = r.str();
  b.header.height = r.u64();
  b.header.prev_digest = read_digest(r);
  b.header.txn_root = read_digest(r);
  b.header.state_root = read_digest(r);
  b.header.tick = r.u64();
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("transaction count exceeds input");
  for (std::uint32_t i = 0; i < n; ++i) {
    b.txns.push_back(decode_transaction(r));
    Receipt rc;
    const auto status = r.u8();
    if (status > 1) throw DecodeError("bad receipt status");
    rc.status = static_cast<TxnStatus>(status);
    rc.error = r.str();
    rc.result = decode_value(r);
    const auto nw = r.u32();
    if (nw > r.remaining()) throw DecodeError("write count exceeds input");
    for (std::uint32_t j = 0; j < nw; ++j) {
      auto k = r.str();
      rc.writes.emplace_back(std::move(k), decode_value(r));
    }
    rc.xtxn_id = r.str();
    const auto ne = r.u32();
    if (ne > r.remaining()) throw DecodeError("event count exceeds input");
    for (std::uint32_t j = 0; j < ne; ++j) rc.events.push_back(read_digest(r));
    b.receipts.push_back(std::move(rc));
  }
  const auto ne = r.u32();
  if (ne > r.remaining()) throw DecodeError("event count exceeds input");
  for (std::uint32_t i = 0; i < ne; ++i) b.events.push_back(xbus::decode_event(r));
  cb.cert.header_digest = read_digest(r);
  const auto ns = r.u32();
  if (ns > r.remaining()) throw DecodeError("signature count exceeds input");
  for (std::uint32_t i = 0; i < ns; ++i) {
    Signature s;
    s.node_id = r.str();
    s.signature = r.bytes();
    cb.cert.signatures.push_back(std::move(s));
  }
  r.expect_done();
  return cb;
}

}  // namespace interop::chain
