#pragma once

#include <memory>
#include <set>

#include "lemonshark/consensus.hpp"
#include "lemonshark/early_finality.hpp"
#include "lemonshark/ordering_exec.hpp"
#include "lemonshark/rbc_net.hpp"

namespace lemonshark {

// One honest node: local view, consensus record, committed state and finality engine.
class Replica {
 public:
  Replica(NodeId id, std::shared_ptr<BlockStore> store, const LeaderSchedule& sched, FinalityMode mode);

  NodeId id() const { return id_; }
  Round round() const { return round_; }
  const DagView& view() const { return view_; }
  const LeaderRecord& record() const { return record_; }
  const CommitContext& commit() const { return commit_; }
  const FinalityEngine& engine() const { return engine_; }
  FinalityEngine& engine() { return engine_; }
  const std::vector<FinalizedBlock>& executed() const { return executed_; }

  // Buffers a delivered block until its parents are present, then inserts it.
  void receive(BlockIndex b);
  // Inserts this node's own freshly created block and moves to its round.
  void adopt_own(const Block& b);
  // The slot was declared missing before this node got to it.
  void skip_to(Round r);

  // Commit, execute and evaluate early finality. Returns true if anything changed.
  bool step(Tick now, Network& net);

  // Round of the next block to create (never beyond `last`), if the node may create one now.
  std::optional<Round> ready(Tick now, Tick leader_timeout, Round last);

 private:
  void insert(BlockIndex b);

  NodeId id_;
  const LeaderSchedule& sched_;
  DagView view_;
  LeaderRecord record_;
  CommitContext commit_;
  FinalityEngine engine_;
  std::vector<FinalizedBlock> executed_;
  std::set<BlockId> pending_;
  Round round_ = 0;
  bool dirty_ = true;
  Round wait_round_ = 0;
  Tick wait_since_ = 0;
};

}  // namespace lemonshark
