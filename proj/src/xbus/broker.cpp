#include "interop/xbus/broker.hpp"

#include <sstream>

#include "interop/xbus/event.hpp"

namespace interop::xbus {

void Broker::enqueue(const std::string& topic, std::uint64_t at, Bytes msg) {
  on_enqueue(topic, at, msg);
  queues_[topic].push_back({at, std::move(msg)});
}

void Broker::publish(const std::string& topic, const Bytes& msg, std::uint64_t tick) {
  ++stats_.published;
  const bool drop = rng_->chance(profile_.drop_rate);
  const bool dup = rng_->chance(profile_.duplicate_rate);
  const bool replay = rng_->chance(profile_.replay_rate);
  auto& hist = history_[topic];
  if (replay && !hist.empty()) {
    ++stats_.replayed;
    enqueue(topic, tick + 1, hist[rng_->below(hist.size())]);
  }
  hist.push_back(msg);
  if (drop || (drop_filter && drop_filter(topic, msg))) {
    ++stats_.dropped;
    return;
  }
  Bytes out = msg;
  if (profile_.forge) {
    ++stats_.forged;
    try {
      auto b = decode_batch(msg);
      b.event.payload.push_back(static_cast<std::uint8_t>(rng_->next()));
      out = encode_batch(b);
    } catch (const DecodeError&) {
      if (!out.empty()) out[rng_->below(out.size())] ^= 0x5a;
    }
  }
  if (dup) {
    ++stats_.duplicated;
    enqueue(topic, tick + 1, out);
  }
  enqueue(topic, tick + 1, std::move(out));
}

std::vector<Bytes> Broker::pull(const std::string& topic, std::uint64_t tick) {
  std::vector<Bytes> out;
  auto it = queues_.find(topic);
  if (it == queues_.end()) return out;
  auto& q = it->second;
  while (!q.empty() && q.front().at <= tick) {
    out.push_back(std::move(q.front().data));
    q.pop_front();
  }
  if (!out.empty()) on_consume(topic, out.size());
  stats_.delivered += out.size();
  return out;
}

std::size_t Broker::queued(const std::string& topic) const {
  const auto it = queues_.find(topic);
  return it == queues_.end() ? 0 : it->second.size();
}

FileBroker::FileBroker(std::string id, FaultProfile profile, Rng& rng, std::filesystem::path path)
    : Broker(std::move(id), profile, rng), path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag, topic;
    ls >> tag;
    if (tag == "E") {
      std::uint64_t at = 0;
      std::string b64;
      ls >> at >> topic >> b64;
      if (!ls) throw DecodeError("bad broker log line: " + line);
      queues_[topic].push_back({at, base64_decode(b64)});
    } else if (tag == "C") {
      std::size_t n = 0;
      ls >> topic >> n;
      auto& q = queues_[topic];
      if (!ls || n > q.size()) throw DecodeError("bad broker log line: " + line);
      q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n));
    } else if (!tag.empty()) {
      throw DecodeError("bad broker log line: " + line);
    }
  }
  out_.open(path_, std::ios::app);
}

void FileBroker::on_enqueue(const std::string& topic, std::uint64_t at, const Bytes& msg) {
  out_ << "E " << at << ' ' << topic << ' ' << base64_encode(msg) << '\n';
  out_.flush();
}

void FileBroker::on_consume(const std::string& topic, std::size_t count) {
  out_ << "C " << topic << ' ' << count << '\n';
  out_.flush();
}

}  // namespace interop::xbus
