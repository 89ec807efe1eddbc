#pragma once

#include <map>
#include <string>
#include <vector>

#include "lemonshark/simulator.hpp"

namespace lemonshark {

// Omniscient recomputation over every broadcast block: commit order and finalized
// outcomes derived from committed-leader histories only.
struct OracleTrace {
  std::vector<BlockId> leaders;
  std::vector<std::map<Key, Value>> state_after;  // state after each leader
  std::vector<std::uint64_t> version_after;
  std::map<TxId, Outcome> outcomes;
};

OracleTrace oracle_replay(const ProtocolParams& params, const std::vector<Block>& blocks);

struct OracleReport {
  std::size_t leader_conflicts = 0;
  std::size_t state_divergences = 0;
  std::size_t final_mismatches = 0;
  std::size_t sto_mismatches = 0;
  std::size_t sto_checked = 0;
  std::size_t sto_unchecked = 0;
  std::size_t cross_node_conflicts = 0;
  std::size_t earliness_violations = 0;
  std::size_t double_executions = 0;
  std::size_t oracle_leaders = 0;
  std::vector<std::string> details;  // first few findings

  std::size_t failures() const;
  bool pass() const { return failures() == 0; }
  nlohmann::ordered_json to_json() const;
};

OracleReport oracle_compare(const OracleTrace& trace, const std::vector<NodeReport>& nodes);
OracleReport oracle_check(const RunResult& run);

}  // namespace lemonshark
