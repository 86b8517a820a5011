#include "interop/chain/state_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace interop::chain {

void VersionedStore::apply(const std::string& key, Value value, Version version) {
  auto& cells = history_[key];
  if (!cells.empty() && !(cells.back().version < version)) {
    throw std::logic_error("state versions must increase: " + key);
  }
  if (value.is_null()) {
    current_.erase(key);
  } else {
    current_.insert_or_assign(key, value);
  }
  cells.push_back({std::move(value), version});
}

Value VersionedStore::get(std::string_view key) const {
  const auto it = current_.find(key);
  return it == current_.end() ? Value::null() : it->second;
}

Value VersionedStore::get_at(std::string_view key, std::uint64_t height) const {
  const auto it = history_.find(key);
  if (it == history_.end()) return Value::null();
  const auto& cells = it->second;
  const auto pos = std::upper_bound(cells.begin(), cells.end(), height,
                                    [](std::uint64_t h, const Cell& c) { return h < c.version.height; });
  if (pos == cells.begin()) return Value::null();
  return std::prev(pos)->value;
}

std::optional<Version> VersionedStore::version(std::string_view key) const {
  const auto it = history_.find(key);
  if (it == history_.end() || it->second.empty()) return std::nullopt;
  return it->second.back().version;
}

std::vector<StateEntry> VersionedStore::history(std::string_view prefix, std::uint64_t from,
                                                std::uint64_t to) const {
  std::vector<StateEntry> out;
  for (auto it = history_.lower_bound(prefix);
       it != history_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
    for (const auto& c : it->second) {
      if (c.version.height >= from && c.version.height <= to) {
        out.push_back({it->first, c.value, c.version});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const StateEntry& a, const StateEntry& b) {
    return std::tie(a.version, a.key) < std::tie(b.version, b.key);
  });
  return out;
}

std::map<std::string, Value> VersionedStore::snapshot_at(std::uint64_t height) const {
  std::map<std::string, Value> out;
  for (const auto& [key, cells] : history_) {
    auto v = get_at(key, height);
    if (!v.is_null()) out.emplace(key, std::move(v));
  }
  return out;
}

}  // namespace interop::chain
