#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interop/chain/value.hpp"
#include "interop/common/digest.hpp"

namespace interop::chain {

enum class ProofKind : std::uint8_t { Membership = 0, Absence = 1 };

/// Which side of the running hash the sibling sits on.
enum class Side : std::uint8_t { Left = 0, Right = 1 };

struct PathStep {
  Digest sibling;
  Side side = Side::Right;

  bool operator==(const PathStep&) const = default;
};

struct LeafWitness {
  std::string key;
  Value value;
  std::vector<PathStep> path;

  bool operator==(const LeafWitness&) const = default;
};

/// Membership proofs carry the leaf and its authentication path. Absence
/// proofs carry the adjacent pair of leaves bracketing the missing key; either
/// side is omitted when the key falls before the first or after the last leaf,
/// and both are omitted for the empty tree.
struct MerkleProof {
  ProofKind kind = ProofKind::Membership;
  std::string leaf_key;
  std::optional<Value> leaf_value;
  std::vector<PathStep> path;
  std::uint64_t root_height = 0;
  std::optional<LeafWitness> left;
  std::optional<LeafWitness> right;

  bool operator==(const MerkleProof&) const = default;
};

Bytes encode_proof(const MerkleProof& p);
MerkleProof decode_proof(std::span<const std::uint8_t> b);

namespace merkle {

/// Root of a tree with no leaves: SHA-256 of the empty string.
Digest empty_root();
/// H(0x00 || len4(key) || key || canonical(value))
Digest leaf_hash(std::string_view key, const Value& v);
/// H(0x01 || left || right)
Digest node_hash(const Digest& left, const Digest& right);
/// Binary tree over `leaves` with the last node duplicated on odd levels.
Digest root_of(std::vector<Digest> leaves);

}  // namespace merkle

/// Binary Merkle tree over keys sorted bytewise. Immutable once built.
class AuthenticatedMap {
 public:
  AuthenticatedMap() = default;
  /// `entries` must not contain Null values (absent keys are simply missing).
  explicit AuthenticatedMap(const std::map<std::string, Value>& entries);

  const Digest& root() const { return root_; }
  std::size_t size() const { return keys_.size(); }

  MerkleProof prove(std::string_view key, std::uint64_t root_height = 0) const;

 private:
  LeafWitness witness(std::size_t index) const;
  std::vector<PathStep> path_for(std::size_t index) const;

  std::vector<std::string> keys_;
  std::vector<Value> values_;
  std::vector<std::vector<Digest>> levels_;
  Digest root_ = merkle::empty_root();
};

/// True iff the proof recomputes to `state_root` and, for absence proofs, the
/// bracketing leaves are adjacent and strictly surround the queried key.
/// Malformed proofs yield false.
bool verify_proof(const Digest& state_root, const MerkleProof& proof);

}  // namespace interop::chain
