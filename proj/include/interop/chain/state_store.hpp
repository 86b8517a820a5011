#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interop/chain/value.hpp"

namespace interop::chain {

/// (block height, index of the transaction within the block).
struct Version {
  std::uint64_t height = 0;
  std::uint32_t index = 0;

  auto operator<=>(const Version&) const = default;
};

struct StateEntry {
  std::string key;
  Value value;
  Version version;

  bool operator==(const StateEntry&) const = default;
};

/// Multi-version key-value store. Every write appends to the key's history;
/// writing Null deletes the key from the current view but keeps the version.
class VersionedStore {
 public:
  /// Versions of a key must be appended in increasing order.
  void apply(const std::string& key, Value value, Version version);

  /// Current value, Null if absent.
  Value get(std::string_view key) const;
  /// Highest version with height <= `height`, Null if none.
  Value get_at(std::string_view key, std::uint64_t height) const;
  /// Version of the current value, if the key has ever been written.
  std::optional<Version> version(std::string_view key) const;

  /// All versions of keys starting with `prefix` whose height lies in
  /// [from, to], ordered by version then key.
  std::vector<StateEntry> history(std::string_view prefix, std::uint64_t from,
                                  std::uint64_t to) const;

  /// Current non-null entries.
  const std::map<std::string, Value, std::less<>>& current() const { return current_; }
  /// Non-null entries as of the end of block `height`.
  std::map<std::string, Value> snapshot_at(std::uint64_t height) const;

 private:
  struct Cell {
    Value value;
    Version version;
  };
  std::map<std::string, std::vector<Cell>, std::less<>> history_;
  std::map<std::string, Value, std::less<>> current_;
};

}  // namespace interop::chain
