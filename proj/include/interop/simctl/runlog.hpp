#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "interop/chain/types.hpp"
#include "json.hpp"

namespace interop::simctl {

class CorruptLog : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replayable record of one run. Text layout:
///
///   interop-run-log 1
///   config <base64 scenario text>
///   seed <n>
///   block <chain> <base64 certified block>      (production order, genesis first)
///   metrics <base64 metrics document>
///   end <sha256 hex of every preceding byte>
struct RunLog {
  std::string config_text;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, chain::CertifiedBlock>> blocks;
  nlohmann::ordered_json metrics;
};

/// Incremental writer; `finish` appends the metrics and the checksum line.
class LogWriter {
 public:
  LogWriter(const std::string& config_text, std::uint64_t seed);
  void block(const std::string& chain, const chain::CertifiedBlock& b);
  std::string finish(const std::string& metrics_text);

 private:
  std::string out_;
};

/// Throws CorruptLog on a bad header, a missing or wrong checksum, an
/// undecodable line, or per-chain blocks that do not link.
RunLog parse_log(const std::string& text);
std::string read_file(const std::string& path);

}  // namespace interop::simctl
