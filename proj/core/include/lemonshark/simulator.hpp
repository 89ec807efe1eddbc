#pragma once

#include <memory>
#include <optional>

#include "lemonshark/replica.hpp"
#include "lemonshark/scenario.hpp"
#include "lemonshark/speculation.hpp"
#include "lemonshark/workload.hpp"

namespace lemonshark {

struct NodeReport {
  NodeId id = 0;
  Round round = 0;
  std::vector<CommittedLeader> leaders;
  FinalityLedger ledger;
  KvState state;
  std::vector<FinalizedBlock> executed;
  std::size_t indirect_skips = 0;
  std::size_t inconsistencies = 0;
  std::size_t view_size = 0;
};

struct RunResult {
  Scenario scenario;
  AdversarySchedule adversary;
  std::shared_ptr<BlockStore> store;
  std::vector<NetEvent> events;
  std::vector<NodeReport> nodes;  // honest nodes, ascending id
  std::vector<TxChain> chains;
  std::vector<GammaSubmission> gamma;
  std::size_t queries = 0;
  std::size_t suppressed = 0;
  Tick final_tick = 0;
  bool totality = true;

  const NodeReport& observer() const { return nodes.front(); }
  const NodeReport* node(NodeId id) const;
};

struct RunOptions {
  std::optional<AdversarySchedule> adversary;  // replaces the scenario's schedule
  bool chains = true;
};

// Runs the deterministic event loop until every honest node has created its last round
// and the network is quiet. Throws ProtocolError if the tick budget runs out.
RunResult run(const Scenario& sc, const RunOptions& opt = {});

// Re-runs a scenario with every recorded delivery pinned to its logged tick.
RunResult replay(const Scenario& sc, const std::vector<NodeId>& crashed, const std::vector<NetEvent>& log);

}  // namespace lemonshark
