#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lemonshark/oracle.hpp"

namespace lemonshark {

struct TxRow {
  TxId txid = 0;
  TxKind type = TxKind::Alpha;
  bool chain = false;
  Round prod_round = 0;
  std::optional<Round> sto_round;
  std::optional<Round> commit_round;
};

struct TypeStats {
  std::size_t total = 0;
  std::size_t finalized = 0;  // committed or STO at the observer
  std::size_t early = 0;      // STO strictly before commit
  double early_rate = 0;
  double mean_latency = 0;         // min(sto, commit) - prod over finalized
  double median_latency = 0;
  double mean_commit_latency = 0;  // commit - prod over committed
  double median_commit_latency = 0;
};

struct BlockStats {
  std::size_t nonleader_persisting = 0;  // non-leader blocks persisting at r+1 and committed
  std::size_t sbo_next_round = 0;        // of those, SBO awarded at r+1
  std::size_t sbo_late_or_missing = 0;
  std::size_t early_violations = 0;      // SBO round > commit round - 1
};

struct PersistStats {
  std::size_t rounds_checked = 0;
  std::size_t violations = 0;
  std::size_t min_persisting = 0;
  std::size_t min_bound = 0;
};

struct ChainStats {
  NodeId client = 0;
  std::optional<Round> completed_round;
  Round first_round = 0;
  std::uint32_t aborts = 0;
};

struct GammaRouting {
  std::size_t lucky = 0, unlucky = 0;
  std::size_t lucky_early = 0, unlucky_early = 0;
  double lucky_latency = 0, unlucky_latency = 0;  // from the target round to finality
};

struct RunMetrics {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint32_t n = 0, f = 0;
  std::vector<NodeId> crashed;
  NodeId observer = 0;
  std::vector<TxRow> rows;
  TypeStats all, alpha, beta, gamma;
  BlockStats blocks;
  PersistStats persist;
  GammaRouting routing;
  std::vector<ChainStats> chains;
  std::size_t committed_leaders = 0;
  std::size_t indirect_skips = 0;
  std::size_t inconsistencies = 0;
  std::size_t queries = 0;
  std::size_t suppressed = 0;
  std::size_t block_count = 0;
  Tick final_tick = 0;
  bool totality = true;
  std::optional<OracleReport> oracle;

  nlohmann::ordered_json to_json() const;
};

RunMetrics compute_metrics(const RunResult& run);
// Persist-bound census over the union DAG.
PersistStats persist_census(const BlockStore& store);

void write_csv(std::ostream& out, const RunMetrics& m);
std::string metrics_csv(const RunMetrics& m);

}  // namespace lemonshark
