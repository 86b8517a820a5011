#include "interop/xbus/event.hpp"

namespace interop::xbus {

void encode_event(ByteWriter& w, const Event& e) {
  w.u8(e.version);
  w.str(e.source_chain);
  w.str(e.dest_chain);
  w.str(e.source_contract);
  w.str(e.dest_contract);
  w.u64(e.nonce);
  w.u8(e.kind);
  w.bytes(e.payload);
}

Bytes encode_event(const Event& e) {
  ByteWriter w;
  encode_event(w, e);
  return std::move(w).take();
}

Digest Event::digest() const { return sha256(encode_event(*this)); }

Event decode_event(ByteReader& r) {
  Event e;
  e.version = r.u8();
  if (e.version != 1) throw DecodeError("unsupported event version");
  e.source_chain = r.str();
  e.dest_chain = r.str();
  e.source_contract = r.str();
  e.dest_contract = r.str();
  e.nonce = r.u64();
  e.kind = r.u8();
  e.payload = r.bytes();
  return e;
}

Bytes encode_batch(const SignedEventBatch& b) {
  ByteWriter w;
  encode_event(w, b.event);
  w.u16(static_cast<std::uint16_t>(b.signatures.size()));
  for (const auto& s : b.signatures) {
    w.str(s.node_id);
    w.bytes(s.signature);
  }
  return std::move(w).take();
}

SignedEventBatch decode_batch(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  SignedEventBatch b;
  b.event = decode_event(r);
  const auto count = r.u16();
  b.signatures.resize(count);
  for (auto& s : b.signatures) {
    s.node_id = r.str();
    s.signature = r.bytes();
  }
  r.expect_done();
  return b;
}

}  // namespace interop::xbus
