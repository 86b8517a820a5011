#include "interop/xbus/bus.hpp"

#include <set>

namespace interop::xbus {

std::vector<SignedEventBatch> consume(const std::string& chain_id, const std::vector<Bytes>& raw,
                                      const KeyDirectory& keys,
                                      const std::function<bool(const std::string&, std::uint64_t)>& seen,
                                      ConsumerStats& stats) {
  std::vector<SignedEventBatch> out;
  std::set<std::pair<std::string, std::uint64_t>> local;
  for (const auto& msg : raw) {
    ++stats.received;
    SignedEventBatch b;
    try {
      b = decode_batch(msg);
    } catch (const DecodeError&) {
      ++stats.malformed;
      continue;
    }
    if (b.event.dest_chain != chain_id) {
      ++stats.misrouted;
      continue;
    }
    const std::pair<std::string, std::uint64_t> id{b.event.source_chain, b.event.nonce};
    if (local.contains(id) || (seen && seen(id.first, id.second))) {
      ++stats.duplicates;
      continue;
    }
    if (!keys.verify_batch(b)) {
      ++stats.invalid;
      continue;
    }
    local.insert(id);
    ++stats.accepted;
    out.push_back(std::move(b));
  }
  return out;
}

Event forge_event(const Event& e) {
  Event f = e;
  f.nonce = e.nonce | (std::uint64_t{1} << 63);
  Bytes payload = to_bytes("forged:");
  payload.insert(payload.end(), e.payload.begin(), e.payload.end());
  f.payload = std::move(payload);
  return f;
}

void Bus::add_chain(chain::Chain& c) {
  Slot& s = slots_[c.id()];
  s.chain = &c;
  s.gateway = std::make_unique<Gateway>(c.id(), c.config().f, *keys_, cfg_.gateway);
}

Broker& Bus::add_broker(std::unique_ptr<Broker> b) {
  brokers_.push_back(std::move(b));
  return *brokers_.back();
}

Gateway& Bus::gateway(const std::string& chain_id) { return *slots_.at(chain_id).gateway; }

void Bus::on_block(const chain::Chain& c, const chain::CertifiedBlock& b, std::uint64_t tick) {
  Slot& slot = slots_.at(c.id());
  const auto& scheme = c.scheme();
  for (const auto& e : b.block.events) {
    ++stats_.events_emitted;
    const Digest d = e.digest();
    for (std::uint32_t i = 0; i < c.config().n; ++i) {
      const std::string nid = c.node_id(i);
      const auto& key = c.config().node_keys[i];
      switch (c.behavior(nid)) {
        case chain::Behavior::Silent: continue;
        case chain::Behavior::EquivocateDigest: {
          const Digest wrong = Hasher().update(d).update("equivocate").finish();
          slot.relay.push_back({e, nid, scheme.sign(key, wrong.span()), tick, 0});
          break;
        }
        case chain::Behavior::ForgeEvents: {
          const Event forged = forge_event(e);
          slot.relay.push_back({forged, nid, scheme.sign(key, forged.digest().span()), tick, 0});
          ++stats_.forged_signatures;
          [[fallthrough]];
        }
        case chain::Behavior::Honest:
          slot.relay.push_back({e, nid, scheme.sign(key, d.span()), tick, 0});
          ++stats_.node_signatures;
          break;
      }
    }
  }
}

void Bus::publish(const SignedEventBatch& b, std::uint64_t tick) {
  ++stats_.batches_published;
  const Bytes msg = encode_batch(b);
  for (auto& br : brokers_) br->publish(b.event.dest_chain, msg, tick);
}

void Bus::step(std::uint64_t tick) {
  for (auto& [id, slot] : slots_) {
    std::vector<RelayEntry> keep;
    for (auto& r : slot.relay) {
      if (r.next > tick) {
        keep.push_back(std::move(r));
        continue;
      }
      if (r.attempts > 0) ++stats_.relay_retransmits;
      auto out = slot.gateway->collect(r.event, r.node, r.sig, tick);
      if (out.batch) publish(*out.batch, tick);
      if (out.acked) continue;
      if (++r.attempts >= cfg_.relay_attempts) continue;
      r.next = tick + cfg_.retransmit_interval;
      keep.push_back(std::move(r));
    }
    slot.relay = std::move(keep);
    for (const auto& b : slot.gateway->step(tick)) publish(b, tick);
  }
}

std::vector<SignedEventBatch> Bus::deliver(chain::Chain& c, std::uint64_t tick) {
  std::vector<Bytes> raw;
  for (auto& br : brokers_) {
    auto msgs = br->pull(c.id(), tick);
    raw.insert(raw.end(), std::make_move_iterator(msgs.begin()), std::make_move_iterator(msgs.end()));
  }
  auto seen = [&c](const std::string& src, std::uint64_t nonce) { return c.has_seen(src, nonce); };
  auto accepted = consume(c.id(), raw, *keys_, seen, stats_.consumer);
  for (const auto& b : accepted) {
    c.deliver(b.event);
    if (on_accept) on_accept(b);
  }
  return accepted;
}

std::size_t Bus::relay_backlog() const {
  std::size_t n = 0;
  for (const auto& [id, s] : slots_) n += s.relay.size();
  return n;
}

}  // namespace interop::xbus
