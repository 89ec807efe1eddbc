#include "lemonshark/fuzz.hpp"

#include <filesystem>
#include <fstream>

#include "lemonshark/rng.hpp"

namespace lemonshark {

namespace {

DelayPolicy make_policy(std::size_t kind, std::uint64_t h, std::uint32_t n, Round rounds) {
  switch (kind) {
    case 0: return SyncPolicy{};
    case 1: return RandomDelayPolicy{2 + h % 5};
    case 2: {
      PartitionPolicy p;
      std::vector<NodeId> g;
      for (NodeId x = 0; x < n; ++x)
        if (keyed(h, {x}) % 2) g.push_back(x);
      if (g.empty() || g.size() == n) g = {static_cast<NodeId>(h % n)};
      p.groups = {g};
      p.lift_tick = 10 + (h >> 8) % 40;
      return p;
    }
    default: {
      ScriptedPolicy s;
      for (std::uint32_t k = 0; k < 3 * n; ++k) {
        const std::uint64_t x = keyed(h, {0x5c, k});
        ScriptedEntry e;
        e.author = static_cast<NodeId>(x % n);
        e.round = 1 + static_cast<Round>((x >> 8) % rounds);
        e.dst = static_cast<NodeId>((x >> 16) % n);
        e.delay = 2 + (x >> 24) % 11;
        s.entries.push_back(e);
      }
      return s;
    }
  }
}

void shape_workload(std::size_t kind, std::uint64_t h, Scenario& sc) {
  auto& w = sc.workload;
  w.txs_per_block = 8;
  switch (kind) {
    case 0:
      w.alpha_pct = 100, w.beta_pct = 0, w.gamma_pct = 0;
      break;
    case 1:
      break;
    case 2:
      w.scope = CrossShardScope::Tx;
      w.alpha_pct = 40, w.beta_pct = 60, w.gamma_pct = 0;
      w.cross_shard_failure_pct = 30;
      w.cross_shard_count = 1 + static_cast<std::uint32_t>(h % std::min<std::uint32_t>(2, sc.params.n - 1));
      break;
    case 3:
      w.scope = CrossShardScope::Tx;
      w.alpha_pct = 40, w.beta_pct = 10, w.gamma_pct = 50;
      w.keys_per_shard = 8;
      break;
    default:
      w.chains = {ChainSpec{0, 4, 0, TxKind::Alpha}, ChainSpec{1, 3, 1 % sc.params.n, TxKind::Beta}};
      break;
  }
}

constexpr std::size_t kWorkloads = 5;
constexpr std::size_t kPolicies = 4;
const char* kPolicyNames[] = {"sync", "random", "partition", "scripted"};

}  // namespace

std::vector<std::pair<std::string, Scenario>> fuzz_grid(const FuzzCampaign& c) {
  std::vector<std::pair<std::string, Scenario>> out;
  if (c.fs.empty()) return out;
  for (std::size_t i = 0; i < c.runs; ++i) {
    const std::uint64_t seed = c.base_seed + i;
    const std::uint64_t h = keyed(seed, {0xf022ULL});
    const std::uint32_t f = c.fs[i % c.fs.size()];
    const std::size_t combo = i / c.fs.size();
    const std::uint32_t faults = static_cast<std::uint32_t>(combo % (f + 1));
    std::size_t pol = (combo / (f + 1)) % kPolicies;
    if (c.adversarial_only) pol = pol % 2 ? 1 : 3;
    const std::size_t wk = (combo / ((f + 1) * kPolicies)) % kWorkloads;

    Scenario sc;
    sc.seed = seed;
    sc.params = ProtocolParams::with_faults(f, seed);
    sc.rounds = c.rounds;
    sc.mode = c.mode;
    sc.schedule.faults = faults;
    sc.schedule.policy = make_policy(pol, h, sc.params.n, sc.rounds);
    shape_workload(wk, h >> 16, sc);
    sc.validate();
    const std::string label = "seed" + std::to_string(seed) + "-n" + std::to_string(sc.params.n) + "-faults" +
                              std::to_string(faults) + "-" + kPolicyNames[pol] + "-w" + std::to_string(wk);
    out.emplace_back(label, std::move(sc));
  }
  return out;
}

FuzzOutcome fuzz_one(const std::string& label, const Scenario& sc) {
  FuzzOutcome o;
  o.scenario = sc;
  o.label = label;
  try {
    const RunResult r = run(sc);
    o.oracle = oracle_check(r);
    o.persist = persist_census(*r.store);
    const auto m = compute_metrics(r);
    o.beta = m.beta;
    o.gamma = m.gamma;
    if (!r.totality) {
      o.error = true;
      o.message = "totality violated";
    }
  } catch (const std::exception& e) {
    o.error = true;
    o.message = e.what();
  }
  return o;
}

FuzzReport fuzz(const FuzzCampaign& c, const std::function<void(const FuzzOutcome&)>& progress) {
  FuzzReport rep;
  for (const auto& [label, sc] : fuzz_grid(c)) {
    const FuzzOutcome o = fuzz_one(label, sc);
    ++rep.runs;
    rep.sto_checked += o.oracle.sto_checked;
    rep.sto_mismatches += o.oracle.sto_mismatches;
    rep.state_divergences += o.oracle.state_divergences;
    rep.leader_conflicts += o.oracle.leader_conflicts;
    rep.persist_rounds += o.persist.rounds_checked;
    rep.persist_violations += o.persist.violations;
    if (o.error) ++rep.errors;
    if (o.error || !o.oracle.pass()) {
      ++rep.failures;
      rep.failing.push_back(label);
      if (!c.fail_dir.empty()) {
        std::filesystem::create_directories(c.fail_dir);
        const std::string path = c.fail_dir + "/" + label + ".json";
        std::ofstream(path) << to_json(sc).dump(2) << '\n';
        rep.saved.push_back(path);
      }
    }
    if (progress) progress(o);
  }
  return rep;
}

nlohmann::ordered_json FuzzReport::to_json() const {
  nlohmann::ordered_json j;
  j["runs"] = runs;
  j["failures"] = failures;
  j["errors"] = errors;
  j["sto_checked"] = sto_checked;
  j["sto_mismatches"] = sto_mismatches;
  j["state_divergences"] = state_divergences;
  j["leader_conflicts"] = leader_conflicts;
  j["persist_rounds"] = persist_rounds;
  j["persist_violations"] = persist_violations;
  j["failing"] = failing;
  j["saved"] = saved;
  return j;
}

}  // namespace lemonshark
