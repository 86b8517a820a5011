#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "interop/common/bytes.hpp"
#include "interop/common/rng.hpp"

namespace interop::xbus {

struct FaultProfile {
  double drop_rate = 0;
  double duplicate_rate = 0;
  double replay_rate = 0;
  /// Rewrites the payload of every message it carries.
  bool forge = false;
};

struct BrokerStats {
  std::uint64_t published = 0;
  std::uint64_t dropped = 0;
  std::uint64_t duplicated = 0;
  std::uint64_t replayed = 0;
  std::uint64_t forged = 0;
  std::uint64_t delivered = 0;
};

/// Untrusted pub/sub transport. Topics are destination chain ids and the
/// messages are encoded SignedEventBatches. A message published at tick t is
/// pulled no earlier than t+1.
///
/// Fault draws per publish, in order: drop, duplicate, replay (plus the
/// replayed index when it fires), then the forged byte position if forging.
class Broker {
 public:
  Broker(std::string id, FaultProfile profile, Rng& rng)
      : id_(std::move(id)), profile_(profile), rng_(&rng) {}
  virtual ~Broker() = default;

  const std::string& id() const { return id_; }
  const FaultProfile& profile() const { return profile_; }
  void set_profile(FaultProfile p) { profile_ = p; }
  const BrokerStats& stats() const { return stats_; }

  void publish(const std::string& topic, const Bytes& msg, std::uint64_t tick);
  std::vector<Bytes> pull(const std::string& topic, std::uint64_t tick);
  std::size_t queued(const std::string& topic) const;

  /// Test hook: messages for which this returns true are silently dropped.
  std::function<bool(const std::string& topic, const Bytes& msg)> drop_filter;

 protected:
  void enqueue(const std::string& topic, std::uint64_t at, Bytes msg);
  virtual void on_enqueue(const std::string&, std::uint64_t, const Bytes&) {}
  virtual void on_consume(const std::string&, std::size_t) {}

  struct Msg {
    std::uint64_t at;
    Bytes data;
  };
  std::map<std::string, std::deque<Msg>> queues_;

 private:
  std::string id_;
  FaultProfile profile_;
  Rng* rng_;
  std::map<std::string, std::vector<Bytes>> history_;
  BrokerStats stats_;
};

/// Broker whose queues live in an append-only log, so a new instance over the
/// same file resumes where a crashed one stopped.
///
/// Log lines: "E <tick> <topic> <base64>" for an enqueue and
/// "C <topic> <count>" for messages consumed from the head of a topic.
class FileBroker final : public Broker {
 public:
  FileBroker(std::string id, FaultProfile profile, Rng& rng, std::filesystem::path path);

 protected:
  void on_enqueue(const std::string& topic, std::uint64_t at, const Bytes& msg) override;
  void on_consume(const std::string& topic, std::size_t count) override;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace interop::xbus
