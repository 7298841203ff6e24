// arpsim: run, validate and list LAN scenarios.
//
//   arpsim run <scenario> [--until S] [--log PATH] [--format jsonl|text] [--dump-spoof-list]
//   arpsim validate <scenario>
//   arpsim list-scenarios
//
// <scenario> is a path, or a bare name looked up in the scenario directory
// ($ARPSIM_SCENARIO_DIR, else the directory shipped with the source tree).
//
// Exit status: 0 all asserts passed, 1 some assert failed, 2 usage or
// scenario error, 3 simulation error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arpsim/arpsim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitAssertFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSimulation = 3;

fs::path scenario_dir() {
  if (const char* env = std::getenv("ARPSIM_SCENARIO_DIR"); env && *env) return env;
  return ARPSIM_DEFAULT_SCENARIO_DIR;
}

fs::path resolve(const std::string& arg) {
  fs::path p(arg);
  if (fs::exists(p)) return p;
  fs::path named = scenario_dir() / p;
  if (!named.has_extension()) named += ".toml";
  if (fs::exists(named)) return named;
  return p;  // let the loader report it
}

void dump_spoof_list(const arpsim::Simulator& sim, std::ostream& os) {
  const arpsim::ArpServer* srv = sim.server();
  if (!srv) {
    os << "spoof list: no server in scenario\n";
    return;
  }
  os << "spoof list (" << srv->spoof_list().size() << ")\n";
  for (const auto& r : srv->spoof_list().records()) {
    os << "  " << arpsim::format_seconds(r.at) << "  " << r.mac.to_string() << "  " << to_string(r.reason)
       << "  frame " << r.evidence_frame;
    if (r.ip) os << "  ip " << r.ip->to_string();
    if (r.eth_src) os << "  eth_src " << r.eth_src->to_string();
    os << '\n';
  }
}

int cmd_run(const std::string& arg, std::optional<double> until, const std::string& log_path,
            const std::string& format, bool spoof) {
  arpsim::Scenario scenario = arpsim::load_scenario(resolve(arg));
  std::optional<arpsim::SimTime> horizon;
  if (until) horizon = arpsim::from_seconds(*until);

  arpsim::Simulator sim(std::move(scenario));
  try {
    sim.run(horizon);
  } catch (const arpsim::SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kExitSimulation;
  }

  auto write = [&](std::ostream& os) {
    if (format == "text") sim.log().write_text(os);
    else sim.log().write_jsonl(os);
  };
  if (log_path.empty()) {
    write(std::cout);
  } else {
    std::ofstream out(log_path);
    if (!out) {
      std::cerr << "cannot write " << log_path << '\n';
      return kExitUsage;
    }
    write(out);
  }
  if (spoof) dump_spoof_list(sim, std::cerr);

  const auto total = sim.assert_count();
  const auto failed = sim.assert_failures();
  std::cerr << sim.scenario().name << ": " << (total - failed) << "/" << total << " asserts passed, "
            << sim.log().size() << " records\n";
  return failed == 0 ? 0 : kExitAssertFailed;
}

int cmd_validate(const std::string& arg) {
  arpsim::Scenario s = arpsim::load_scenario(resolve(arg));
  std::cout << "ok: " << s.name << " (" << s.hosts.size() << " hosts, " << s.script.size() << " script actions)\n";
  return 0;
}

int cmd_list() {
  const fs::path dir = scenario_dir();
  if (!fs::is_directory(dir)) {
    std::cerr << "scenario directory not found: " << dir.string() << '\n';
    return kExitUsage;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".toml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  int status = 0;
  for (const auto& f : files) {
    try {
      const arpsim::Scenario s = arpsim::load_scenario(f);
      std::cout << f.stem().string() << "\t" << s.description << '\n';
    } catch (const arpsim::ScenarioError& e) {
      std::cout << f.stem().string() << "\t(invalid: " << e.issues().size() << " error(s))\n";
      status = kExitUsage;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic ARP spoofing / ARP server LAN simulator"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::optional<double> until;
  std::string log_path;
  std::string format = "jsonl";
  bool spoof = false;

  auto* run = app.add_subcommand("run", "Run a scenario and emit its event log");
  run->add_option("scenario", scenario_arg, "Scenario file or name")->required();
  run->add_option("--until", until, "Stop at this virtual time (seconds)")->check(CLI::NonNegativeNumber);
  run->add_option("--log", log_path, "Write the log here instead of stdout");
  run->add_option("--format", format, "Log format")->check(CLI::IsMember({"jsonl", "text"}));
  run->add_flag("--dump-spoof-list", spoof, "Print the server's spoof list to stderr after the run");

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("scenario", scenario_arg, "Scenario file or name")->required();

  app.add_subcommand("list-scenarios", "List scenarios in the scenario directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_arg, until, log_path, format, spoof);
    if (validate->parsed()) return cmd_validate(scenario_arg);
    return cmd_list();
  } catch (const arpsim::ScenarioError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const arpsim::SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kExitSimulation;
  }
}
