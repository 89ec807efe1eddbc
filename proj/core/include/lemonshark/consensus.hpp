#pragma once

#include <optional>
#include <vector>

#include "lemonshark/dag.hpp"

namespace lemonshark {

enum class VoteType : std::uint8_t { Steady, Fallback };

// Seeded steady rotation (no two consecutive steady leaders equal) and per-wave coin.
class LeaderSchedule {
 public:
  explicit LeaderSchedule(const ProtocolParams& params);

  static bool is_leader_round(Round r) { return r % 2 == 1; }
  static bool is_wave_first_round(Round r) { return r % 4 == 1; }

  // Throws ProtocolError for rounds without a steady slot.
  NodeId steady_leader(Round round) const;
  NodeId fallback_leader(std::uint32_t wave) const;

 private:
  std::uint32_t n_;
  std::uint64_t seed_;
  mutable std::vector<NodeId> steady_;
};

// Vote type of a voter's first-round block of a wave (pure in the block's content).
VoteType classify_vote(const BlockStore& store, const LeaderSchedule& sched, BlockIndex first_round_block);
// Vote type carried by any block of a wave, through its author's first-round block.
std::optional<VoteType> vote_type_of(const BlockStore& store, const LeaderSchedule& sched, BlockIndex voter);

// Tallies restricted to the blocks flagged in `scope` (a view's presence set or an
// ancestor set).
std::size_t steady_votes(const BlockStore& store, const LeaderSchedule& sched, const Bits& scope, BlockIndex leader);
std::size_t fallback_votes(const BlockStore& store, const LeaderSchedule& sched, const Bits& scope, BlockIndex leader);

struct VoterCensus {
  std::size_t steady = 0;
  std::size_t fallback = 0;
  std::size_t unknown = 0;
};
VoterCensus voter_census(const DagView& view, const LeaderSchedule& sched, std::uint32_t wave);

struct CommittedLeader {
  BlockId id;
  Round commit_round = 0;
  bool direct = false;
};

struct WaveRecord {
  std::uint32_t wave = 0;
  BlockId steady1;
  BlockId steady2;
  std::optional<BlockId> fallback;  // revealed only once the wave's fourth round is visible
  std::size_t steady1_votes = 0;
  std::size_t steady2_votes = 0;
  std::size_t fallback_votes = 0;
};

// Per-node consensus state; only the owner's step function mutates it.
struct LeaderRecord {
  std::vector<CommittedLeader> committed;
  Bits committed_leaders;
  std::size_t indirect_skips = 0;

  bool is_committed_leader(BlockIndex i) const { return test_bit(committed_leaders, i); }
  std::optional<BlockId> last() const {
    if (committed.empty()) return std::nullopt;
    return committed.back().id;
  }
};

WaveRecord describe_wave(const DagView& view, const LeaderSchedule& sched, std::uint32_t wave);

// Applies the direct and indirect commit rules against the view; appends to
// record.committed and returns the new leaders in commit order.
std::vector<BlockId> try_commit(const DagView& view, const LeaderSchedule& sched, LeaderRecord& record,
                                Round current_round);

// The leader block for a slot, if registered in the store.
BlockIndex steady_block(const BlockStore& store, const LeaderSchedule& sched, Round round);
BlockIndex fallback_block(const BlockStore& store, const LeaderSchedule& sched, std::uint32_t wave);

}  // namespace lemonshark
