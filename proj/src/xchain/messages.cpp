#include "interop/xchain/messages.hpp"

namespace interop::xchain {

using chain::decode_value;
using chain::encode_value;

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Locks: return "locks";
    case Mode::Occ: return "occ";
    case Mode::Mini: return "mini";
  }
  return "?";
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) return {key, {}};
  return {key.substr(0, dot), key.substr(dot + 1)};
}

namespace {

std::uint32_t count(ByteReader& r) {
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("count exceeds input");
  return n;
}

void put_version(ByteWriter& w, const std::optional<Version>& v) {
  w.u8(v ? 1 : 0);
  if (v) {
    w.u64(v->height);
    w.u32(v->index);
  }
}

std::optional<Version> get_version(ByteReader& r) {
  const auto tag = r.u8();
  if (tag > 1) throw DecodeError("bad version tag");
  if (!tag) return std::nullopt;
  Version v;
  v.height = r.u64();
  v.index = r.u32();
  return v;
}

void put_items(ByteWriter& w, const std::vector<ReadItem>& items) {
  w.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& it : items) {
    w.str(it.key);
    encode_value(w, it.value);
    put_version(w, it.version);
  }
}

std::vector<ReadItem> get_items(ByteReader& r) {
  std::vector<ReadItem> out(count(r));
  for (auto& it : out) {
    it.key = r.str();
    it.value = decode_value(r);
    it.version = get_version(r);
  }
  return out;
}

void put_kvs(ByteWriter& w, const std::vector<std::pair<std::string, Value>>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& [k, val] : v) {
    w.str(k);
    encode_value(w, val);
  }
}

std::vector<std::pair<std::string, Value>> get_kvs(ByteReader& r) {
  std::vector<std::pair<std::string, Value>> out(count(r));
  for (auto& [k, v] : out) {
    k = r.str();
    v = decode_value(r);
  }
  return out;
}

Mode get_mode(ByteReader& r) {
  const auto m = r.u8();
  if (m > 2) throw DecodeError("bad mode");
  return static_cast<Mode>(m);
}

bool get_bool(ByteReader& r) {
  const auto b = r.u8();
  if (b > 1) throw DecodeError("bad bool");
  return b == 1;
}

}  // namespace

Bytes encode(const ReadRequestMsg& m) {
  ByteWriter w;
  w.u64(m.nonce);
  w.str(m.txn_id);
  w.u8(m.lock ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(m.keys.size()));
  for (const auto& k : m.keys) w.str(k);
  return std::move(w).take();
}

ReadRequestMsg decode_read_request(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  ReadRequestMsg m;
  m.nonce = r.u64();
  m.txn_id = r.str();
  m.lock = get_bool(r);
  m.keys.resize(count(r));
  for (auto& k : m.keys) k = r.str();
  r.expect_done();
  return m;
}

Bytes encode(const ReadResponseMsg& m) {
  ByteWriter w;
  put_items(w, m.items);
  w.u64(m.nonce);
  w.u64(m.anchor_height);
  w.str(m.status);
  return std::move(w).take();
}

ReadResponseMsg decode_read_response(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  ReadResponseMsg m;
  m.items = get_items(r);
  m.nonce = r.u64();
  m.anchor_height = r.u64();
  m.status = r.str();
  r.expect_done();
  return m;
}

Bytes encode(const PrepareMsg& m) {
  ByteWriter w;
  w.str(m.txn_id);
  w.u8(static_cast<std::uint8_t>(m.mode));
  put_kvs(w, m.compares);
  w.u32(static_cast<std::uint32_t>(m.reads.size()));
  for (const auto& [k, v] : m.reads) {
    w.str(k);
    put_version(w, v);
  }
  put_kvs(w, m.writes);
  return std::move(w).take();
}

PrepareMsg decode_prepare(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  PrepareMsg m;
  m.txn_id = r.str();
  m.mode = get_mode(r);
  m.compares = get_kvs(r);
  m.reads.resize(count(r));
  for (auto& [k, v] : m.reads) {
    k = r.str();
    v = get_version(r);
  }
  m.writes = get_kvs(r);
  r.expect_done();
  return m;
}

Bytes encode(const VoteMsg& m) {
  ByteWriter w;
  w.str(m.txn_id);
  w.u8(static_cast<std::uint8_t>(m.phase));
  w.u8(m.yes ? 1 : 0);
  w.str(m.reason);
  put_items(w, m.reads);
  return std::move(w).take();
}

VoteMsg decode_vote(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  VoteMsg m;
  m.txn_id = r.str();
  const auto phase = r.u8();
  if (phase > 1) throw DecodeError("bad vote phase");
  m.phase = static_cast<VotePhase>(phase);
  m.yes = get_bool(r);
  m.reason = r.str();
  m.reads = get_items(r);
  r.expect_done();
  return m;
}

Bytes encode(const DecideMsg& m) {
  ByteWriter w;
  w.str(m.txn_id);
  w.u8(m.commit ? 1 : 0);
  return std::move(w).take();
}

DecideMsg decode_decide(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  DecideMsg m;
  m.txn_id = r.str();
  m.commit = get_bool(r);
  r.expect_done();
  return m;
}

Bytes encode(const TwoPCRecord& m) {
  ByteWriter w;
  w.str(m.txn_id);
  w.str(m.on_behalf);
  w.u8(static_cast<std::uint8_t>(m.phase));
  w.u8(static_cast<std::uint8_t>(m.mode));
  w.u32(static_cast<std::uint32_t>(m.participants.size()));
  for (const auto& [c, p] : m.participants) {
    w.str(c);
    w.bytes(p);
  }
  w.u32(static_cast<std::uint32_t>(m.votes.size()));
  for (const auto& v : m.votes) {
    w.str(v.chain);
    w.u8(v.yes ? 1 : 0);
    w.bytes(v.batch);
  }
  return std::move(w).take();
}

TwoPCRecord decode_record(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  TwoPCRecord m;
  m.txn_id = r.str();
  m.on_behalf = r.str();
  const auto phase = r.u8();
  if (phase > 2) throw DecodeError("bad phase");
  m.phase = static_cast<Phase>(phase);
  m.mode = get_mode(r);
  m.participants.resize(count(r));
  for (auto& [c, p] : m.participants) {
    c = r.str();
    p = r.bytes();
  }
  m.votes.resize(count(r));
  for (auto& v : m.votes) {
    v.chain = r.str();
    v.yes = get_bool(r);
    v.batch = r.bytes();
  }
  r.expect_done();
  return m;
}

Bytes encode_pairs(const std::vector<std::pair<std::string, Bytes>>& v) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& [a, b] : v) {
    w.str(a);
    w.bytes(b);
  }
  return std::move(w).take();
}

std::vector<std::pair<std::string, Bytes>> decode_pairs(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  std::vector<std::pair<std::string, Bytes>> out(count(r));
  for (auto& [a, p] : out) {
    a = r.str();
    p = r.bytes();
  }
  r.expect_done();
  return out;
}

}  // namespace interop::xchain
