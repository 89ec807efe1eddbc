#include "lemonshark/scenario.hpp"

#include <fstream>
#include <set>

namespace lemonshark {

std::string to_string(ChainMode m) { return m == ChainMode::Pipelined ? "pipelined" : "sequential"; }

ChainMode chain_mode_from_string(const std::string& s) {
  if (s == "pipelined") return ChainMode::Pipelined;
  if (s == "sequential") return ChainMode::Sequential;
  throw ConfigError("unknown chain mode: " + s);
}

void Scenario::validate() const {
  params.validate();
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  const auto& w = workload;
  if (w.alpha_pct + w.beta_pct + w.gamma_pct != 100) throw ConfigError("alpha_pct + beta_pct + gamma_pct must equal 100");
  if (w.cross_shard_block_pct > 100 || w.cross_shard_failure_pct > 100) throw ConfigError("percentage above 100");
  if (w.cross_shard_count >= params.n) throw ConfigError("cross_shard_count must be < n");
  if (w.cross_shard_count == 0 && (w.beta_pct > 0 || w.gamma_pct > 0))
    throw ConfigError("beta or gamma transactions need cross_shard_count >= 1");
  if (w.keys_per_shard < 1) throw ConfigError("keys_per_shard must be >= 1");
  if (w.keys_per_shard > 1000) throw ConfigError("keys_per_shard must be <= 1000");
  std::set<NodeId> clients;
  for (const auto& c : w.chains) {
    if (c.kind == TxKind::GammaSub) throw ConfigError("chains over gamma sub-transactions are not supported");
    if (c.length < 1) throw ConfigError("chain length must be >= 1");
    if (c.shard >= params.n) throw ConfigError("chain shard out of range");
    if (c.kind == TxKind::Beta && params.n < 2) throw ConfigError("beta chain needs a second shard");
    if (!clients.insert(c.client).second) throw ConfigError("duplicate chain client id");
  }
  adversary().validate(params);
}

AdversarySchedule Scenario::adversary() const {
  AdversarySchedule a;
  a.seed = schedule.seed.value_or(seed);
  a.policy = schedule.policy;
  if (!schedule.crashed.empty()) a.crashed = schedule.crashed;
  else if (schedule.faults) {
    if (*schedule.faults > params.f) throw ConfigError("faults must be <= f");
    a.crashed = choose_crashed(params.n, *schedule.faults, a.seed);
  }
  return a;
}

nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["params"] = {{"n", s.params.n}, {"f", s.params.f}, {"v", s.params.v}, {"coin_seed", std::to_string(s.params.coin_seed)}};
  j["rounds"] = s.rounds;
  j["drain_rounds"] = s.drain_rounds;
  j["leader_timeout"] = s.leader_timeout;
  j["max_ticks"] = s.max_ticks;
  j["mode"] = to_string(s.mode);
  j["seed"] = std::to_string(s.seed);
  nlohmann::ordered_json sch;
  if (s.schedule.seed) sch["seed"] = std::to_string(*s.schedule.seed);
  if (s.schedule.faults) sch["faults"] = *s.schedule.faults;
  if (!s.schedule.crashed.empty()) sch["crashed"] = s.schedule.crashed;
  sch["policy"] = to_json(s.schedule.policy);
  j["schedule"] = std::move(sch);
  const auto& w = s.workload;
  nlohmann::ordered_json wj;
  wj["txs_per_block"] = w.txs_per_block;
  wj["keys_per_shard"] = w.keys_per_shard;
  wj["cross_shard_scope"] = w.scope == CrossShardScope::Block ? "block" : "tx";
  wj["cross_shard_block_pct"] = w.cross_shard_block_pct;
  wj["alpha_pct"] = w.alpha_pct;
  wj["beta_pct"] = w.beta_pct;
  wj["gamma_pct"] = w.gamma_pct;
  wj["cross_shard_count"] = w.cross_shard_count;
  wj["cross_shard_failure_pct"] = w.cross_shard_failure_pct;
  wj["gamma_max_lag"] = w.gamma_max_lag;
  auto chains = nlohmann::ordered_json::array();
  for (const auto& c : w.chains)
    chains.push_back({{"client", c.client}, {"length", c.length}, {"shard", c.shard}, {"kind", to_string(c.kind)}});
  wj["chains"] = std::move(chains);
  wj["chain_mode"] = to_string(w.chain_mode);
  j["workload"] = std::move(wj);
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  if (j.contains("seed")) s.seed = u64_from_json(j.at("seed"));
  s.params.coin_seed = s.seed;
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (p.contains("f")) {
      s.params.f = p.at("f").get<std::uint32_t>();
      s.params.n = 3 * s.params.f + 1;
    }
    if (p.contains("n")) s.params.n = p.at("n").get<std::uint32_t>();
    s.params.v = p.value("v", s.params.v);
    if (p.contains("coin_seed")) s.params.coin_seed = u64_from_json(p.at("coin_seed"));
  }
  s.rounds = j.value("rounds", s.rounds);
  s.drain_rounds = j.value("drain_rounds", s.drain_rounds);
  s.leader_timeout = j.value("leader_timeout", s.leader_timeout);
  s.max_ticks = j.value("max_ticks", s.max_ticks);
  if (j.contains("mode")) s.mode = finality_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("schedule")) {
    const auto& sj = j.at("schedule");
    if (sj.contains("seed")) s.schedule.seed = u64_from_json(sj.at("seed"));
    if (sj.contains("faults")) s.schedule.faults = sj.at("faults").get<std::uint32_t>();
    if (sj.contains("crashed")) s.schedule.crashed = sj.at("crashed").get<std::vector<NodeId>>();
    if (sj.contains("policy")) s.schedule.policy = delay_policy_from_json(sj.at("policy"));
  }
  if (j.contains("workload")) {
    const auto& wj = j.at("workload");
    auto& w = s.workload;
    w.txs_per_block = wj.value("txs_per_block", w.txs_per_block);
    w.keys_per_shard = wj.value("keys_per_shard", w.keys_per_shard);
    if (wj.contains("cross_shard_scope")) {
      const auto sc = wj.at("cross_shard_scope").get<std::string>();
      if (sc == "block") w.scope = CrossShardScope::Block;
      else if (sc == "tx") w.scope = CrossShardScope::Tx;
      else throw ConfigError("cross_shard_scope must be block or tx");
    }
    w.cross_shard_block_pct = wj.value("cross_shard_block_pct", w.cross_shard_block_pct);
    w.alpha_pct = wj.value("alpha_pct", w.alpha_pct);
    w.beta_pct = wj.value("beta_pct", w.beta_pct);
    w.gamma_pct = wj.value("gamma_pct", w.gamma_pct);
    w.cross_shard_count = wj.value("cross_shard_count", w.cross_shard_count);
    w.cross_shard_failure_pct = wj.value("cross_shard_failure_pct", w.cross_shard_failure_pct);
    w.gamma_max_lag = wj.value("gamma_max_lag", w.gamma_max_lag);
    for (const auto& c : wj.value("chains", nlohmann::json::array())) {
      ChainSpec cs;
      cs.client = c.at("client").get<NodeId>();
      cs.length = c.value("length", cs.length);
      cs.shard = c.value("shard", cs.shard);
      if (c.contains("kind")) cs.kind = tx_kind_from_string(c.at("kind").get<std::string>());
      w.chains.push_back(cs);
    }
    if (wj.contains("chain_mode")) w.chain_mode = chain_mode_from_string(wj.at("chain_mode").get<std::string>());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario parse error: " + std::string(e.what()));
  }
  return scenario_from_json(j);
}

}  // namespace lemonshark
