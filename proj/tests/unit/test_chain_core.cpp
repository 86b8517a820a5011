#include <map>
#include <set>

#include "doctest.h"
#include "interop/chain/chain.hpp"
#include "interop/chain/merkle.hpp"
#include "interop/common/rng.hpp"

using namespace interop;
using namespace interop::chain;

namespace {

class KvContract final : public Contract {
 public:
  explicit KvContract(std::string id = "Kv") : id_(std::move(id)) {}
  const std::string& id() const override { return id_; }
  Value call(ExecContext& ctx, const std::string& method, const std::vector<Value>& args) override {
    if (method == "set") {
      ctx.put(arg_str(args, 0), arg(args, 1));
      return Value::null();
    }
    if (method == "fail") throw ContractFailure("Boom", "asked to fail");
    if (method == "poke") {
      ctx.put_raw("Other.key", Value::integer(1));
      return Value::null();
    }
    throw ContractFailure("UnknownMethod", method);
  }

 private:
  std::string id_;
};

std::shared_ptr<const SignatureScheme> test_scheme() { return make_scheme("test"); }

Chain make_chain(std::string id = "A", std::uint32_t n = 4, std::uint32_t f = 1) {
  auto s = test_scheme();
  return Chain(ChainConfig::generate(std::move(id), n, f, *s), s);
}

void set(Chain& c, const std::string& k, Value v) {
  c.submit_call(CallerRef::user("u"), "Kv", "set", {Value::string(k), std::move(v)});
}

}  // namespace

TEST_CASE("value encoding is canonical and strict") {
  const Value vals[] = {Value::null(), Value::boolean(true), Value::integer(-2),
                        Value::string("ab"), Value::bytes({1, 2, 3})};
  for (const auto& v : vals) CHECK(decode_value(encode_value(v)) == v);
  CHECK(to_hex(encode_value(Value::integer(-2))) == "02fffffffffffffffe");
  CHECK(to_hex(encode_value(Value::string("ab"))) == "03000000026162");
  CHECK_THROWS_AS(decode_value(from_hex("0102")), DecodeError);
  CHECK_THROWS_AS(decode_value(from_hex("09")), DecodeError);
  CHECK_THROWS_AS(decode_value(from_hex("030000000561")), DecodeError);
}

TEST_CASE("create_chain validates n >= 3f+1") {
  auto c = make_chain("A", 4, 1);
  CHECK(c.height() == 0);
  CHECK(c.block(0).block.header.state_root == merkle::empty_root());
  CHECK(c.block(0).block.header.prev_digest == Digest::zero());
  CHECK_THROWS_AS(make_chain("B", 3, 1), ChainError);
  auto c7 = make_chain("C", 7, 2);
  CHECK(c7.quorum() == 5);
  CHECK(c.verify_cert(c.block(0).cert));
}

TEST_CASE("register, submit and produce") {
  auto c = make_chain();
  c.register_contract(std::make_shared<KvContract>());
  CHECK_THROWS_AS(c.register_contract(std::make_shared<KvContract>()), ChainError);
  CHECK_THROWS_AS(c.submit_call(CallerRef::user("u"), "Nope", "x", {}), ChainError);

  // Not yet active in the registration block.
  set(c, "x", Value::integer(1));
  auto b1 = c.produce_block(1);
  REQUIRE(b1);
  CHECK(b1->block.receipts[0].ok());
  CHECK_FALSE(b1->block.receipts[1].ok());
  CHECK(b1->block.receipts[1].error.starts_with("UnknownContract"));

  set(c, "x", Value::integer(5));
  set(c, "y", Value::string("s"));
  c.submit_call(CallerRef::user("u"), "Kv", "fail", {});
  auto b2 = c.produce_block(2);
  REQUIRE(b2);
  CHECK(b2->block.header.height == 2);
  CHECK(b2->block.header.prev_digest == b1->block.header.digest());
  CHECK(b2->cert.signatures.size() == 4);
  CHECK(c.verify_cert(b2->cert));
  CHECK(b2->block.receipts[2].status == TxnStatus::Failed);
  CHECK(b2->block.receipts[2].writes.empty());
  CHECK(c.read_state("Kv.x") == Value::integer(5));
  CHECK(c.read_state("Kv.x", 1).is_null());
  CHECK(c.read_state("Kv.missing").is_null());
  CHECK_THROWS_AS(c.read_state("Kv.x", 3), ChainError);
  CHECK_FALSE(c.produce_block(3));

  // Per-caller nonces.
  auto t = Transaction::make(CallerRef::user("v"), "Kv", "set", {Value::string("z"), Value::integer(1)}, 7);
  c.submit(t);
  CHECK_THROWS_AS(c.submit(t), ChainError);

  // Same id on another chain is a separate namespace.
  auto other = make_chain("B");
  CHECK_NOTHROW(other.register_contract(std::make_shared<KvContract>()));
}

TEST_CASE("contracts cannot write outside their namespace") {
  auto c = make_chain();
  c.register_contract(std::make_shared<KvContract>());
  c.produce_block(1);
  c.submit_call(CallerRef::user("u"), "Kv", "poke", {});
  auto b = c.produce_block(2);
  CHECK(b->block.receipts[0].error.starts_with("NamespaceViolation"));
}

TEST_CASE("quorum failure under behaviour assignments") {
  // Enumerate every assignment of behaviours to 4 nodes and compare against a
  // direct count of signatures that verify.
  const Behavior all[] = {Behavior::Honest, Behavior::Silent, Behavior::EquivocateDigest,
                          Behavior::ForgeEvents};
  for (int mask = 0; mask < 256; ++mask) {
    auto c = make_chain();
    int valid = 0;
    for (int i = 0; i < 4; ++i) {
      const Behavior b = all[(mask >> (2 * i)) & 3];
      c.set_behavior(c.node_id(i), b);
      if (b == Behavior::Honest || b == Behavior::ForgeEvents) ++valid;
    }
    c.register_contract(std::make_shared<KvContract>());
    const auto before = c.store().current().size();
    if (valid >= 3) {
      auto b = c.produce_block(1);
      REQUIRE(b);
      CHECK(static_cast<int>(b->cert.signatures.size()) == valid);
    } else {
      CHECK_THROWS_AS(c.produce_block(1), ChainError);
      CHECK(c.height() == 0);
      CHECK(c.store().current().size() == before);
      CHECK(c.has_pending());
    }
  }
}

TEST_CASE("history and ranges") {
  auto c = make_chain();
  c.register_contract(std::make_shared<KvContract>());
  c.produce_block(1);
  for (int h = 2; h <= 6; ++h) {
    if (h == 3 || h == 5) set(c, "k", Value::integer(h));
    set(c, "pad", Value::integer(h));
    c.produce_block(h);
  }
  auto all = c.get_history("Kv.k", 1, 6);
  REQUIRE(all.size() == 2);
  CHECK(all[0].version.height == 3);
  CHECK(all[1].version.height == 5);
  CHECK(c.get_history("Kv.k", 6, 6).empty());
  CHECK_THROWS_AS(c.get_history("Kv.k", 5, 4), ChainError);
  // Disjoint covering ranges concatenate to the full history.
  auto a = c.get_history("Kv.", 0, 3);
  auto b = c.get_history("Kv.", 4, 6);
  a.insert(a.end(), b.begin(), b.end());
  CHECK(a == c.get_history("Kv.", 0, 6));
}

TEST_CASE("proofs from the chain verify against headers") {
  auto c = make_chain();
  c.register_contract(std::make_shared<KvContract>());
  c.produce_block(1);
  set(c, "b", Value::integer(1));
  set(c, "d", Value::integer(2));
  c.produce_block(2);
  set(c, "b", Value::integer(3));
  c.produce_block(3);

  const auto root2 = c.block(2).block.header.state_root;
  const auto root3 = c.block(3).block.header.state_root;
  auto p = c.get_proof("Kv.b", 2);
  CHECK(p.kind == ProofKind::Membership);
  CHECK(*p.leaf_value == Value::integer(1));
  CHECK(verify_proof(root2, p));
  CHECK_FALSE(verify_proof(root3, p));
  auto absent = c.get_proof("Kv.c", 3);
  CHECK(absent.kind == ProofKind::Absence);
  CHECK(verify_proof(root3, absent));
  CHECK_THROWS_AS(c.get_proof("Kv.b", 9), ChainError);

  auto tampered = c.get_proof("Kv.b", 3);
  tampered.leaf_value = Value::integer(4);
  CHECK_FALSE(verify_proof(root3, tampered));
}

TEST_CASE("absence proofs bracket the key (independent rebuild)") {
  Rng rng(7);
  for (int round = 0; round < 200; ++round) {
    std::map<std::string, Value> m;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) m["k" + std::to_string(rng.below(40))] = Value::integer(i);
    AuthenticatedMap am(m);
    // Independent root: hash leaves pairwise with explicit duplication.
    std::vector<Digest> level;
    for (const auto& [k, v] : m) level.push_back(merkle::leaf_hash(k, v));
    if (level.empty()) {
      CHECK(am.root() == merkle::empty_root());
    } else {
      while (level.size() > 1) {
        if (level.size() % 2) level.push_back(level.back());
        std::vector<Digest> up;
        for (std::size_t i = 0; i < level.size(); i += 2) up.push_back(merkle::node_hash(level[i], level[i + 1]));
        level = up;
      }
      CHECK(am.root() == level[0]);
    }
    for (int q = 0; q < 5; ++q) {
      const std::string key = "k" + std::to_string(rng.below(40));
      auto p = am.prove(key);
      CHECK(verify_proof(am.root(), p));
      if (m.contains(key)) {
        CHECK(p.kind == ProofKind::Membership);
        continue;
      }
      CHECK(p.kind == ProofKind::Absence);
      auto hi = m.upper_bound(key);
      if (hi == m.end()) {
        CHECK_FALSE(p.right.has_value());
      } else {
        CHECK(p.right->key == hi->first);
      }
      if (hi == m.begin()) {
        CHECK_FALSE(p.left.has_value());
      } else {
        CHECK(p.left->key == std::prev(hi)->first);
      }
      CHECK(decode_proof(encode_proof(p)) == p);
    }
  }
  MerkleProof vacuous;
  vacuous.kind = ProofKind::Absence;
  vacuous.leaf_key = "anything";
  CHECK(verify_proof(merkle::empty_root(), vacuous));
}

TEST_CASE("block codec round trip") {
  auto c = make_chain();
  c.register_contract(std::make_shared<KvContract>());
  c.produce_block(1);
  set(c, "x", Value::bytes({9, 9}));
  auto b = c.produce_block(2);
  const auto bytes = encode_block(*b);
  CHECK(decode_block(bytes) == *b);
  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(decode_block(cut), DecodeError);
}

TEST_CASE("identical inputs give identical chains") {
  auto run = [] {
    auto c = make_chain();
    c.register_contract(std::make_shared<KvContract>());
    c.produce_block(1);
    for (int i = 0; i < 10; ++i) set(c, "k" + std::to_string(i % 3), Value::integer(i));
    c.produce_block(2);
    return c.block(2).block.header.digest();
  };
  CHECK(run() == run());
}
