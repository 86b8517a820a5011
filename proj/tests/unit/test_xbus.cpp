#include <filesystem>

#include "doctest.h"
#include "interop/sim/world.hpp"
#include "interop/xbus/bus.hpp"
#include "bus_net.hpp"

using namespace interop;
using namespace interop::chain;
using namespace interop::xbus;

using testnet::Net;

TEST_CASE("event wire format is bit-exact") {
  Event e;
  e.source_chain = "A";
  e.dest_chain = "B";
  e.source_contract = "x";
  e.dest_contract = "y";
  e.nonce = 258;
  e.kind = 3;
  e.payload = {0xab};
  CHECK(to_hex(encode_event(e)) ==
        "01" "0000000141" "0000000142" "0000000178" "0000000179" "0000000000000102" "03" "00000001ab");
  SignedEventBatch b{e, {{"A/0", {0x01, 0x02}}}};
  CHECK(to_hex(encode_batch(b)) == to_hex(encode_event(e)) + "0001" "00000003412f30" "000000020102");
  CHECK(decode_batch(encode_batch(b)) == b);
  auto bad = encode_batch(b);
  bad[0] = 2;
  CHECK_THROWS_AS(decode_batch(bad), DecodeError);
}

TEST_CASE("events flow end to end with sequential nonces") {
  Net net;
  net.send(1);
  net.send(2);
  net.world.step();
  const auto& blk = net.a.block(net.a.height()).block;
  REQUIRE(blk.events.size() == 2);
  CHECK(blk.events[1].nonce == blk.events[0].nonce + 1);
  CHECK(blk.events[0].source_contract == "Emitter");
  CHECK(net.world.bus().gateway("A").stats().received >= 2);
  CHECK(net.world.run_until([&] { return net.hits() == 2; }, 10));
}

TEST_CASE("gateway thresholds and expiry") {
  auto scheme = make_scheme("test");
  KeyDirectory dir(scheme);
  auto cfg = ChainConfig::generate("A", 4, 1, *scheme);
  std::map<std::string, Bytes> keys;
  for (int i = 0; i < 4; ++i) keys[node_id("A", i)] = cfg.node_keys[i].public_key;
  dir.add_chain("A", 1, keys);
  Gateway g("A", 1, dir, {.timeout = 5});
  Event e;
  e.source_chain = "A";
  e.dest_chain = "B";
  const Digest d = e.digest();
  auto sig = [&](int i) { return scheme->sign(cfg.node_keys[i], d.span()); };

  auto r0 = g.collect(e, "A/0", sig(0), 0);
  CHECK_FALSE(r0.batch);
  CHECK_FALSE(r0.acked);
  CHECK_FALSE(g.collect(e, "A/0", sig(0), 0).batch);  // same node twice does not count
  auto bad = g.collect(e, "A/1", sig(0), 0);
  CHECK_FALSE(bad.batch);
  CHECK(g.stats().invalid_signatures == 1);
  auto r1 = g.collect(e, "A/2", sig(2), 1);
  REQUIRE(r1.batch);
  CHECK(r1.batch->signatures.size() == 2);
  CHECK(dir.verify_batch(*r1.batch));
  // Emitted exactly once.
  auto r2 = g.collect(e, "A/3", sig(3), 1);
  CHECK(r2.acked);
  CHECK_FALSE(r2.batch);

  Event lone = e;
  lone.nonce = 9;
  g.collect(lone, "A/0", scheme->sign(cfg.node_keys[0], lone.digest().span()), 2);
  CHECK(g.pending() == 1);
  g.step(7);
  CHECK(g.pending() == 0);
  CHECK(g.stats().expired == 1);
}

TEST_CASE("silent node: gateway sees three signatures") {
  Net net;
  net.a.set_behavior("A/1", Behavior::Silent);
  net.send(1);
  net.world.step();
  CHECK(net.world.bus().stats().node_signatures == 3);
  CHECK(net.world.run_until([&] { return net.hits() == 1; }, 10));
}

TEST_CASE("any single Byzantine node never gets a forged event delivered") {
  for (auto beh : {Behavior::Honest, Behavior::Silent, Behavior::EquivocateDigest, Behavior::ForgeEvents}) {
    for (int node = 0; node < 4; ++node) {
      Net net;
      net.a.set_behavior(node_id("A", node), beh);
      for (int i = 0; i < 3; ++i) net.send(i);
      net.world.run_until([] { return false; }, 40);
      CHECK(net.hits() == 3);
      for (const auto& blk : net.b.blocks()) {
        for (const auto& t : blk.block.txns) CHECK(t.nonce < (std::uint64_t{1} << 63));
      }
    }
  }
}

TEST_CASE("f+1 colluding forgers get a forged event delivered") {
  Net net;
  net.a.set_behavior("A/0", Behavior::ForgeEvents);
  net.a.set_behavior("A/1", Behavior::ForgeEvents);
  net.send(1);
  net.world.run_until([] { return false; }, 20);
  bool forged = false;
  for (const auto& blk : net.b.blocks()) {
    for (const auto& t : blk.block.txns) forged |= t.nonce >= (std::uint64_t{1} << 63);
  }
  CHECK(forged);
}

TEST_CASE("broker redundancy, forging broker, duplicates and replays") {
  SUBCASE("dropping broker plus honest broker") {
    Net net(3, 2);
    net.world.bus().brokers()[0]->set_profile({.drop_rate = 1.0});
    net.send(1);
    CHECK(net.world.run_until([&] { return net.hits() == 1; }, 10));
  }
  SUBCASE("forging broker alone delivers nothing") {
    Net net(3, 1);
    net.world.bus().brokers()[0]->set_profile({.forge = true});
    net.send(1);
    net.world.run_until([] { return false; }, 30);
    CHECK(net.hits() == 0);
    CHECK(net.world.bus().stats().consumer.invalid > 0);
  }
  SUBCASE("same batch from two brokers and replays land once") {
    Net net(3, 2);
    net.world.bus().brokers()[1]->set_profile({.duplicate_rate = 1.0, .replay_rate = 1.0});
    for (int i = 0; i < 4; ++i) net.send(i);
    net.world.run_until([] { return false; }, 120);
    CHECK(net.hits() == 4);
    CHECK(net.world.bus().stats().consumer.duplicates > 0);
  }
}

TEST_CASE("consumer drops below-threshold batches and is stateless") {
  Net net;
  std::vector<Bytes> captured;
  net.world.bus().brokers()[0]->drop_filter = [&](const std::string&, const Bytes& m) {
    captured.push_back(m);
    return false;
  };
  net.send(7);
  net.world.run_until([&] { return net.hits() == 1; }, 10);
  REQUIRE_FALSE(captured.empty());
  auto b = decode_batch(captured[0]);
  ConsumerStats st;
  auto seen = [&](const std::string& s, std::uint64_t n) { return net.b.has_seen(s, n); };
  CHECK(consume("B", {captured[0]}, net.world.keys(), seen, st).empty());  // replay
  CHECK(st.duplicates == 1);
  auto weak = b;
  weak.signatures.resize(1);
  CHECK(consume("B", {encode_batch(weak)}, net.world.keys(), nullptr, st).empty());
  CHECK(st.invalid == 1);
  // A fresh consumer with no memory makes the same decision.
  ConsumerStats st2;
  CHECK(consume("B", {captured[0]}, net.world.keys(), seen, st2).empty());
  CHECK(consume("B", {captured[0]}, net.world.keys(), nullptr, st2).size() == 1);
}

TEST_CASE("gateway crash recovers through node retransmission") {
  Net net;
  net.world.bus().gateway("A").crash(net.world.tick() + 8);
  net.send(1);
  CHECK(net.world.run_until([&] { return net.hits() == 1; }, 30));
  CHECK(net.world.bus().stats().relay_retransmits > 0);
}

TEST_CASE("file broker survives a crash") {
  const auto path = std::filesystem::temp_directory_path() / "interop_file_broker_test.log";
  std::filesystem::remove(path);
  Rng rng(1);
  {
    FileBroker br("f", {}, rng, path);
    br.publish("B", {1, 2, 3}, 0);
    br.publish("B", {4}, 0);
    br.publish("C", {5}, 1);
    CHECK(br.pull("B", 1).size() == 2);
  }
  FileBroker again("f", {}, rng, path);
  CHECK(again.pull("B", 10).empty());
  auto c = again.pull("C", 10);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == Bytes{5});
  std::filesystem::remove(path);
}
