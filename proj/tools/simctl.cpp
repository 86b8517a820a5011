#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "interop/simctl/audit.hpp"
#include "interop/simctl/runlog.hpp"
#include "interop/simctl/runner.hpp"

using namespace interop::simctl;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kAuditFailed = 2;

void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << data;
}

/// Runs, writes outputs, audits the fresh log. Wall time goes to stderr only
/// so the metrics document stays reproducible.
int run_and_report(const ScenarioConfig& cfg, const std::string& out, const std::string& log_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_scenario(cfg);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  if (out.empty()) {
    std::cout << r.metrics_text << "\n";
  } else {
    write_file(out, r.metrics_text + "\n");
  }
  if (!log_path.empty()) write_file(log_path, r.log);
  std::cerr << "status " << r.status << ", " << r.metrics["ticks"] << " ticks, wall " << ms << " ms\n";
  const auto report = audit_text(r.log);
  if (!report.ok()) {
    std::cerr << report.str();
    return kAuditFailed;
  }
  return r.status == "ok" ? kOk : kError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-chain interoperability simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> drop;
  std::optional<std::uint64_t> max_ticks;
  std::string out;
  std::string log_path;
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--mode", mode, "occ or locks")->check(CLI::IsMember({"occ", "locks"}));
  run->add_option("--drop-rate", drop, "Drop rate for every broker")->check(CLI::Range(0.0, 1.0));
  run->add_option("--max-ticks", max_ticks, "Tick budget for the script");
  run->add_option("--out", out, "Write metrics here instead of stdout");
  run->add_option("--log", log_path, "Write the run log here");

  auto* demo = app.add_subcommand("demo", "Run a bundled scenario");
  std::string demo_name;
  demo->add_option("name", demo_name, "Scenario name")->required()->check(CLI::IsMember({"auction"}));

  auto* audit = app.add_subcommand("audit", "Check the invariants of a run log");
  std::string audit_path;
  audit->add_option("log", audit_path, "Run log")->required();

  auto* replay = app.add_subcommand("replay", "Re-run a log's scenario and compare byte for byte");
  std::string replay_path;
  replay->add_option("log", replay_path, "Run log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*run) {
      auto cfg = load_scenario(scenario);
      if (seed) cfg.seed = *seed;
      if (mode) cfg.mode = parse_mode(*mode);
      if (drop) set_drop_rate(cfg, *drop);
      if (max_ticks) cfg.max_ticks = *max_ticks;
      return run_and_report(cfg, out, log_path);
    }
    if (*demo) return run_and_report(parse_scenario(demo_scenario_text()), out, log_path);
    if (*audit) {
      const auto report = audit_text(read_file(audit_path));
      std::cout << report.str();
      return report.ok() ? kOk : kAuditFailed;
    }
    if (*replay) {
      const auto text = read_file(replay_path);
      const auto log = parse_log(text);
      const auto r = run_scenario(parse_scenario(log.config_text));
      if (r.log != text) {
        std::cout << "replay diverged\n";
        return kAuditFailed;
      }
      std::cout << "replay identical\n" << r.metrics_text << "\n";
      return kOk;
    }
  } catch (const CorruptLog& e) {
    std::cerr << "CorruptLog: " << e.what() << "\n";
    return kAuditFailed;
  } catch (const ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
