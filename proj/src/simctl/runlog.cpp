#include "interop/simctl/runlog.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "interop/common/digest.hpp"

namespace interop::simctl {

namespace {

constexpr std::string_view kHeader = "interop-run-log 1";

}  // namespace

LogWriter::LogWriter(const std::string& config_text, std::uint64_t seed) {
  out_ += kHeader;
  out_ += "\nconfig " + base64_encode(to_bytes(config_text)) + "\n";
  out_ += "seed " + std::to_string(seed) + "\n";
}

void LogWriter::block(const std::string& chain, const chain::CertifiedBlock& b) {
  out_ += "block " + chain + " " + base64_encode(chain::encode_block(b)) + "\n";
}

std::string LogWriter::finish(const std::string& metrics_text) {
  out_ += "metrics " + base64_encode(to_bytes(metrics_text)) + "\n";
  const auto sum = sha256(out_).hex();
  return out_ + "end " + sum + "\n";
}

RunLog parse_log(const std::string& text) {
  const auto end_at = text.rfind("end ");
  if (end_at == std::string::npos || (end_at != 0 && text[end_at - 1] != '\n')) {
    throw CorruptLog("missing end line");
  }
  const std::string body = text.substr(0, end_at);
  std::string tail = text.substr(end_at + 4);
  if (!tail.empty() && tail.back() == '\n') tail.pop_back();
  if (tail != sha256(body).hex()) throw CorruptLog("checksum mismatch");

  RunLog log;
  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw CorruptLog("bad header");
  bool have_config = false;
  bool have_seed = false;
  bool have_metrics = false;
  std::map<std::string, chain::BlockHeader> last;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    const auto sp = line.find(' ');
    const std::string tag = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (have_metrics) throw CorruptLog("line " + std::to_string(no) + ": content after metrics");
    try {
      if (tag == "config" && !have_config) {
        log.config_text = to_string(base64_decode(rest));
        have_config = true;
      } else if (tag == "seed" && have_config && !have_seed) {
        std::size_t used = 0;
        log.seed = std::stoull(rest, &used);
        if (used != rest.size()) throw CorruptLog("bad seed");
        have_seed = true;
      } else if (tag == "block" && have_seed) {
        const auto sp2 = rest.find(' ');
        if (sp2 == std::string::npos) throw CorruptLog("bad block line");
        const std::string chain = rest.substr(0, sp2);
        auto b = chain::decode_block(base64_decode(rest.substr(sp2 + 1)));
        const auto& h = b.block.header;
        if (h.chain_id != chain) throw CorruptLog("block chain id mismatch");
        const auto it = last.find(chain);
        if (it == last.end()) {
          if (h.height != 0) throw CorruptLog("chain " + chain + " does not start at genesis");
        } else if (h.height != it->second.height + 1 || h.prev_digest != it->second.digest()) {
          throw CorruptLog("chain " + chain + " breaks at height " + std::to_string(h.height));
        }
        last[chain] = h;
        log.blocks.emplace_back(chain, std::move(b));
      } else if (tag == "metrics" && have_seed) {
        log.metrics = nlohmann::ordered_json::parse(to_string(base64_decode(rest)));
        have_metrics = true;
      } else {
        throw CorruptLog("unexpected \"" + tag + "\"");
      }
    } catch (const CorruptLog& e) {
      throw CorruptLog("line " + std::to_string(no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw CorruptLog("line " + std::to_string(no) + ": " + e.what());
    }
  }
  if (!have_metrics) throw CorruptLog("missing metrics");
  return log;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace interop::simctl
