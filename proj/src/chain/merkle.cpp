#include "interop/chain/merkle.hpp"

#include <algorithm>

namespace interop::chain {

namespace merkle {

Digest empty_root() {
  static const Digest kEmpty = sha256(std::string_view{});
  return kEmpty;
}

Digest leaf_hash(std::string_view key, const Value& v) {
  ByteWriter w;
  w.u8(0x00);
  w.str(key);
  encode_value(w, v);
  return sha256(w.data());
}

Digest node_hash(const Digest& left, const Digest& right) {
  const std::uint8_t tag = 0x01;
  return Hasher().update(std::span(&tag, 1)).update(left).update(right).finish();
}

namespace {

std::vector<Digest> next_level(const std::vector<Digest>& level) {
  std::vector<Digest> out;
  out.reserve((level.size() + 1) / 2);
  for (std::size_t i = 0; i < level.size(); i += 2) {
    const Digest& right = i + 1 < level.size() ? level[i + 1] : level[i];
    out.push_back(node_hash(level[i], right));
  }
  return out;
}

}  // namespace

Digest root_of(std::vector<Digest> leaves) {
  if (leaves.empty()) return empty_root();
  while (leaves.size() > 1) leaves = next_level(leaves);
  return leaves.front();
}

}  // namespace merkle

AuthenticatedMap::AuthenticatedMap(const std::map<std::string, Value>& entries) {
  keys_.reserve(entries.size());
  values_.reserve(entries.size());
  std::vector<Digest> leaves;
  leaves.reserve(entries.size());
  for (const auto& [k, v] : entries) {
    keys_.push_back(k);
    values_.push_back(v);
    leaves.push_back(merkle::leaf_hash(k, v));
  }
  if (leaves.empty()) return;
  levels_.push_back(std::move(leaves));
  while (levels_.back().size() > 1) levels_.push_back(merkle::next_level(levels_.back()));
  root_ = levels_.back().front();
}

std::vector<PathStep> AuthenticatedMap::path_for(std::size_t index) const {
  std::vector<PathStep> path;
  for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
    const auto& level = levels_[lvl];
    if (index % 2 == 0) {
      const std::size_t sib = index + 1 < level.size() ? index + 1 : index;
      path.push_back({level[sib], Side::Right});
    } else {
      path.push_back({level[index - 1], Side::Left});
    }
    index /= 2;
  }
  return path;
}

LeafWitness AuthenticatedMap::witness(std::size_t index) const {
  return LeafWitness{keys_[index], values_[index], path_for(index)};
}

MerkleProof AuthenticatedMap::prove(std::string_view key, std::uint64_t root_height) const {
  MerkleProof p;
  p.leaf_key = std::string(key);
  p.root_height = root_height;
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  const auto idx = static_cast<std::size_t>(it - keys_.begin());
  if (it != keys_.end() && *it == key) {
    p.kind = ProofKind::Membership;
    p.leaf_value = values_[idx];
    p.path = path_for(idx);
    return p;
  }
  p.kind = ProofKind::Absence;
  if (idx > 0) p.left = witness(idx - 1);
  if (idx < keys_.size()) p.right = witness(idx);
  return p;
}

namespace {

struct Folded {
  Digest root;
  std::uint64_t position = 0;
  bool leftmost = true;   // every step had the running node on the left
  bool rightmost = true;  // every left-hand step was a duplicate pad
  bool ok = true;
};

Folded fold(const Digest& leaf, const std::vector<PathStep>& path) {
  Folded f;
  if (path.size() > 63) {
    f.ok = false;
    return f;
  }
  Digest cur = leaf;
  for (std::size_t lvl = 0; lvl < path.size(); ++lvl) {
    const auto& step = path[lvl];
    if (step.side == Side::Right) {
      if (step.sibling != cur) f.rightmost = false;
      cur = merkle::node_hash(cur, step.sibling);
    } else {
      // Padding only ever duplicates a left node, never a right one.
      if (step.sibling == cur) {
        f.ok = false;
        return f;
      }
      f.leftmost = false;
      f.position |= std::uint64_t{1} << lvl;
      cur = merkle::node_hash(step.sibling, cur);
    }
  }
  f.root = cur;
  return f;
}

bool valid_side(Side s) { return s == Side::Left || s == Side::Right; }

bool valid_path(const std::vector<PathStep>& path) {
  return std::all_of(path.begin(), path.end(), [](const PathStep& s) { return valid_side(s.side); });
}

}  // namespace

bool verify_proof(const Digest& state_root, const MerkleProof& proof) {
  if (proof.kind == ProofKind::Membership) {
    if (!proof.leaf_value || proof.leaf_value->is_null() || proof.left || proof.right) return false;
    if (!valid_path(proof.path)) return false;
    const auto f = fold(merkle::leaf_hash(proof.leaf_key, *proof.leaf_value), proof.path);
    return f.ok && f.root == state_root;
  }
  if (proof.kind != ProofKind::Absence) return false;
  if (proof.leaf_value || !proof.path.empty()) return false;
  if (!proof.left && !proof.right) return state_root == merkle::empty_root();

  std::optional<Folded> lf, rf;
  if (proof.left) {
    const auto& w = *proof.left;
    if (w.value.is_null() || !valid_path(w.path) || !(w.key < proof.leaf_key)) return false;
    lf = fold(merkle::leaf_hash(w.key, w.value), w.path);
    if (!lf->ok || lf->root != state_root) return false;
  }
  if (proof.right) {
    const auto& w = *proof.right;
    if (w.value.is_null() || !valid_path(w.path) || !(proof.leaf_key < w.key)) return false;
    rf = fold(merkle::leaf_hash(w.key, w.value), w.path);
    if (!rf->ok || rf->root != state_root) return false;
  }
  if (lf && rf) {
    return proof.left->path.size() == proof.right->path.size() &&
           rf->position == lf->position + 1;
  }
  if (lf) return lf->rightmost;
  return rf->leftmost;
}

namespace {

void encode_path(ByteWriter& w, const std::vector<PathStep>& path) {
  w.u32(static_cast<std::uint32_t>(path.size()));
  for (const auto& s : path) {
    w.raw(s.sibling.span());
    w.u8(static_cast<std::uint8_t>(s.side));
  }
}

std::vector<PathStep> decode_path(ByteReader& r) {
  const auto n = r.u32();
  if (n > 64) throw DecodeError("merkle path too long");
  std::vector<PathStep> path(n);
  for (auto& s : path) {
    s.sibling = Digest::from_span(r.raw(32));
    const auto side = r.u8();
    if (side > 1) throw DecodeError("invalid path side");
    s.side = static_cast<Side>(side);
  }
  return path;
}

void encode_witness(ByteWriter& w, const std::optional<LeafWitness>& lw) {
  w.u8(lw ? 1 : 0);
  if (!lw) return;
  w.str(lw->key);
  encode_value(w, lw->value);
  encode_path(w, lw->path);
}

std::optional<LeafWitness> decode_witness(ByteReader& r) {
  const auto flag = r.u8();
  if (flag > 1) throw DecodeError("invalid witness flag");
  if (flag == 0) return std::nullopt;
  LeafWitness lw;
  lw.key = r.str();
  lw.value = decode_value(r);
  lw.path = decode_path(r);
  return lw;
}

}  // namespace

Bytes encode_proof(const MerkleProof& p) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(p.kind));
  w.str(p.leaf_key);
  w.u8(p.leaf_value ? 1 : 0);
  if (p.leaf_value) encode_value(w, *p.leaf_value);
  encode_path(w, p.path);
  w.u64(p.root_height);
  encode_witness(w, p.left);
  encode_witness(w, p.right);
  return std::move(w).take();
}

MerkleProof decode_proof(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  MerkleProof p;
  const auto kind = r.u8();
  if (kind > 1) throw DecodeError("invalid proof kind");
  p.kind = static_cast<ProofKind>(kind);
  p.leaf_key = r.str();
  const auto has_value = r.u8();
  if (has_value > 1) throw DecodeError("invalid value flag");
  if (has_value) p.leaf_value = decode_value(r);
  p.path = decode_path(r);
  p.root_height = r.u64();
  p.left = decode_witness(r);
  p.right = decode_witness(r);
  r.expect_done();
  return p;
}

}  // namespace interop::chain
