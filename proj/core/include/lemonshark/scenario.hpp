#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lemonshark/early_finality.hpp"
#include "lemonshark/rbc_net.hpp"

namespace lemonshark {

enum class ChainMode : std::uint8_t { Pipelined, Sequential };
std::string to_string(ChainMode m);
ChainMode chain_mode_from_string(const std::string& s);

struct ChainSpec {
  NodeId client = 0;
  std::uint32_t length = 3;
  std::uint32_t shard = 0;
  TxKind kind = TxKind::Alpha;  // Alpha or Beta; the foreign read of a Beta chain is on shard+1
};

// Block scope: a block is cross-shard with probability cross_shard_block_pct and then draws
// every transaction from the mix; otherwise it is all-alpha. Tx scope: every transaction
// draws from the mix.
enum class CrossShardScope : std::uint8_t { Block, Tx };

struct WorkloadSpec {
  std::uint32_t txs_per_block = 10;
  std::uint32_t keys_per_shard = 16;
  CrossShardScope scope = CrossShardScope::Block;
  std::uint32_t cross_shard_block_pct = 50;
  std::uint32_t alpha_pct = 34;
  std::uint32_t beta_pct = 33;
  std::uint32_t gamma_pct = 33;
  std::uint32_t cross_shard_count = 1;
  std::uint32_t cross_shard_failure_pct = 0;
  // Partner of a gamma pair is submitted for round r + d, d uniform in [0, gamma_max_lag].
  std::uint32_t gamma_max_lag = 2;
  std::vector<ChainSpec> chains;
  ChainMode chain_mode = ChainMode::Pipelined;
};

struct ScheduleSpec {
  std::optional<std::uint64_t> seed;  // defaults to the scenario seed
  std::optional<std::uint32_t> faults;  // seeded crash choice
  std::vector<NodeId> crashed;         // explicit crash set (wins over faults)
  DelayPolicy policy = SyncPolicy{};
};

struct Scenario {
  ProtocolParams params;
  Round rounds = 40;
  Round drain_rounds = 8;
  Tick leader_timeout = 50;
  Tick max_ticks = 200000;
  ScheduleSpec schedule;
  WorkloadSpec workload;
  FinalityMode mode = FinalityMode::Lemonshark;
  std::uint64_t seed = 1;

  void validate() const;
  AdversarySchedule adversary() const;
  Round last_round() const { return rounds + drain_rounds; }
};

nlohmann::ordered_json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

}  // namespace lemonshark
