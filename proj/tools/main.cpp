#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lemonshark/event_log.hpp"
#include "lemonshark/fuzz.hpp"

using namespace lemonshark;
namespace fs = std::filesystem;

namespace {

struct Dumps {
  bool leaders = false, state = false, finality = false, events = false;
  std::string out = ".";
};

void add_dump_flags(CLI::App* cmd, Dumps& d) {
  cmd->add_flag("--dump-leaders", d.leaders, "Write committed leader lists (leaders.json)");
  cmd->add_flag("--dump-state", d.state, "Write final key-value state per node (state.json)");
  cmd->add_flag("--dump-finality", d.finality, "Write finality ledgers per node (finality.json)");
  cmd->add_flag("--dump-events", d.events, "Write the event log (events.jsonl)");
  cmd->add_option("--out", d.out, "Output directory");
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

nlohmann::ordered_json leaders_json(const RunResult& r) {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : r.nodes) {
    auto ls = nlohmann::ordered_json::array();
    for (const auto& l : n.leaders) {
      auto x = to_json(l.id);
      x["commit_round"] = l.commit_round;
      x["direct"] = l.direct;
      ls.push_back(std::move(x));
    }
    nodes.push_back({{"id", n.id}, {"leaders", std::move(ls)}});
  }
  return {{"nodes", std::move(nodes)}};
}

nlohmann::ordered_json per_node(const RunResult& r, const char* field, bool state) {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : r.nodes) {
    nlohmann::ordered_json x;
    x["id"] = n.id;
    x[field] = state ? n.state.to_json() : n.ledger.to_json();
    nodes.push_back(std::move(x));
  }
  return {{"nodes", std::move(nodes)}};
}

int emit(const RunResult& r, const Dumps& d, bool with_oracle) {
  fs::create_directories(d.out);
  const fs::path out(d.out);
  RunMetrics m = compute_metrics(r);
  if (with_oracle) m.oracle = oracle_check(r);
  write_json(out / "metrics.json", m.to_json());
  std::ofstream(out / "metrics.csv") << metrics_csv(m);
  if (d.leaders) write_json(out / "leaders.json", leaders_json(r));
  if (d.state) write_json(out / "state.json", per_node(r, "state", true));
  if (d.finality) write_json(out / "finality.json", per_node(r, "ledger", false));
  if (d.events) save_event_log((out / "events.jsonl").string(), EventLog{r.scenario, r.adversary.crashed, r.events});

  std::cout << "mode=" << m.mode << " seed=" << m.seed << " n=" << m.n << " crashed=" << m.crashed.size()
            << " blocks=" << m.block_count << " leaders=" << m.committed_leaders << " ticks=" << m.final_tick << '\n';
  std::cout << "txs=" << m.all.total << " finalized=" << m.all.finalized << " early=" << m.all.early
            << " early_rate=" << m.all.early_rate << " mean_latency=" << m.all.mean_latency
            << " mean_commit_latency=" << m.all.mean_commit_latency << '\n';
  if (m.oracle) {
    std::cout << "oracle=" << (m.oracle->pass() ? "pass" : "fail") << " sto_checked=" << m.oracle->sto_checked
              << " sto_mismatches=" << m.oracle->sto_mismatches << " state_divergences=" << m.oracle->state_divergences
              << " leader_conflicts=" << m.oracle->leader_conflicts << '\n';
    for (const auto& s : m.oracle->details) std::cout << "  " << s << '\n';
    return m.oracle->pass() ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic DAG-BFT simulator with early finality"};
  app.require_subcommand(1);

  Dumps run_d, replay_d;
  std::string scenario_path, events_path, finality_path, mode;
  std::uint64_t seed = 0;
  bool no_oracle = false;

  auto* run_cmd = app.add_subcommand("run", "Run a scenario");
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the scenario seed");
  auto* mode_opt = run_cmd->add_option("--mode", mode, "lemonshark | naive | bullshark");
  run_cmd->add_flag("--no-oracle", no_oracle, "Skip the safety oracle");
  add_dump_flags(run_cmd, run_d);

  auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded event log");
  replay_cmd->add_option("--events", events_path, "Event log (JSON lines)")->required()->check(CLI::ExistingFile);
  add_dump_flags(replay_cmd, replay_d);

  auto* oracle_cmd = app.add_subcommand("oracle", "Check a recorded run against the commitment oracle");
  oracle_cmd->add_option("--events", events_path, "Event log (JSON lines)")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--finality", finality_path, "Finality ledgers to check instead of the replayed ones")
      ->check(CLI::ExistingFile);

  FuzzCampaign camp;
  std::string fuzz_mode, fuzz_out = "fuzz-out";
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Seeded fuzz campaign over the parameter grid");
  fuzz_cmd->add_option("--runs", camp.runs, "Number of runs");
  fuzz_cmd->add_option("--seed", camp.base_seed, "First seed");
  fuzz_cmd->add_option("--rounds", camp.rounds, "Rounds per run");
  fuzz_cmd->add_option("--mode", fuzz_mode, "lemonshark | naive | bullshark");
  fuzz_cmd->add_flag("--adversarial", camp.adversarial_only, "Random and scripted delay policies only");
  fuzz_cmd->add_option("--out", fuzz_out, "Directory for the report and failing scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      Scenario sc = load_scenario(scenario_path);
      if (*seed_opt) {
        sc.seed = seed;
        sc.params.coin_seed = seed;
      }
      if (*mode_opt) sc.mode = finality_mode_from_string(mode);
      sc.validate();
      return emit(run(sc), run_d, !no_oracle);
    }
    if (*replay_cmd) {
      const EventLog log = load_event_log(events_path);
      return emit(replay(log.scenario, log.crashed, log.events), replay_d, true);
    }
    if (*oracle_cmd) {
      const EventLog log = load_event_log(events_path);
      RunResult r = replay(log.scenario, log.crashed, log.events);
      if (!finality_path.empty()) {
        std::ifstream in(finality_path);
        const auto j = nlohmann::json::parse(in);
        for (const auto& x : j.at("nodes")) {
          const auto id = x.at("id").get<NodeId>();
          for (auto& n : r.nodes)
            if (n.id == id) n.ledger = FinalityLedger::from_json(x.at("ledger"));
        }
      }
      const OracleReport rep = oracle_check(r);
      std::cout << rep.to_json().dump(2) << '\n';
      return rep.pass() ? 0 : 2;
    }
    if (*fuzz_cmd) {
      if (!fuzz_mode.empty()) camp.mode = finality_mode_from_string(fuzz_mode);
      camp.fail_dir = fuzz_out + "/failing";
      const auto rep = fuzz(camp, [](const FuzzOutcome& o) {
        if (o.error || !o.oracle.pass())
          std::cout << "FAIL " << o.label << (o.error ? " error: " + o.message : "") << '\n';
      });
      fs::create_directories(fuzz_out);
      write_json(fs::path(fuzz_out) / "report.json", rep.to_json());
      std::cout << "runs=" << rep.runs << " failures=" << rep.failures << " sto_checked=" << rep.sto_checked
                << " sto_mismatches=" << rep.sto_mismatches << " persist_violations=" << rep.persist_violations << '\n';
      return rep.failures == 0 ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
