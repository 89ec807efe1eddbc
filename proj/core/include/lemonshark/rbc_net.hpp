#pragma once

#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <variant>
#include <vector>

#include "lemonshark/dag.hpp"

namespace lemonshark {

enum class EventKind : std::uint8_t { Broadcast, Deliver, RoundAdvance, Query, QueryReply };

std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct NetEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Deliver;
  NodeId src = 0;
  NodeId dst = 0;
  BlockId block;  // broadcast payload, or the queried candidate
  Tick tick = 0;  // delivery tick for Deliver, issue tick otherwise
  bool positive = false;  // QueryReply only
  friend bool operator==(const NetEvent&, const NetEvent&) = default;
};

nlohmann::ordered_json to_json(const NetEvent& e);
NetEvent net_event_from_json(const nlohmann::json& j);

struct SyncPolicy {};
struct RandomDelayPolicy {
  Tick max_ticks = 4;
};
struct PartitionPolicy {
  std::vector<std::vector<NodeId>> groups;
  Tick lift_tick = 100;
};
struct ScriptedEntry {
  NodeId author = 0;
  Round round = 0;
  NodeId dst = 0;
  std::optional<Tick> delay;  // relative to the broadcast tick
  std::optional<Tick> at;     // absolute tick
};
// Unlisted (block, destination) pairs are delivered on the next tick.
struct ScriptedPolicy {
  std::vector<ScriptedEntry> entries;
};
using DelayPolicy = std::variant<SyncPolicy, RandomDelayPolicy, PartitionPolicy, ScriptedPolicy>;

std::string policy_name(const DelayPolicy& p);
nlohmann::ordered_json to_json(const DelayPolicy& p);
DelayPolicy delay_policy_from_json(const nlohmann::json& j);

struct AdversarySchedule {
  std::uint64_t seed = 0;
  std::vector<NodeId> crashed;
  DelayPolicy policy = SyncPolicy{};

  bool is_crashed(NodeId n) const;
  void validate(const ProtocolParams& params) const;
};

// Seeded choice of `faults` crashed nodes.
std::vector<NodeId> choose_crashed(std::uint32_t n, std::uint32_t faults, std::uint64_t seed);

enum class MissingStatus : std::uint8_t { DefinitelyMissing, PossiblyExists };

// Atomic-with-delay reliable broadcast. Every accepted broadcast is delivered to every
// honest node with identical content; ordering is fixed by (tick, seq).
class Network {
 public:
  Network(ProtocolParams params, AdversarySchedule sched);

  // Schedules one Deliver per honest node (the sender's own at `now`). Returns nothing
  // for a crashed sender or for a slot already declared missing.
  std::vector<NetEvent> rbc_broadcast(NodeId node, const Block& b, Tick now);
  // Polls 2f+1 honest nodes for their vote on `candidate`. A DefinitelyMissing verdict
  // is binding: that slot can never be broadcast afterwards.
  MissingStatus query_missing(NodeId querier, const BlockId& candidate, Tick now);
  void log_round_advance(NodeId node, Round round, Tick now);

  bool issued(const BlockId& id) const { return issued_.count(id) != 0; }
  bool suppressed(const BlockId& id) const { return suppressed_.count(id) != 0; }
  std::size_t suppressed_count() const { return suppressed_.size(); }

  bool idle() const { return queue_.empty(); }
  Tick next_tick() const;
  std::vector<NetEvent> pop_due(Tick t);

  const std::vector<NetEvent>& log() const { return log_; }
  const AdversarySchedule& schedule() const { return sched_; }
  Tick delivery_tick(const BlockId& b, NodeId dst, Tick now) const;

 private:
  NetEvent& record(NetEvent e);

  ProtocolParams params_;
  AdversarySchedule sched_;
  std::vector<NetEvent> log_;
  std::set<BlockId> issued_;
  std::set<BlockId> suppressed_;
  std::map<std::tuple<NodeId, Round, NodeId>, ScriptedEntry> script_;
  std::vector<NodeId> partition_group_;

  struct Later {
    bool operator()(const NetEvent& a, const NetEvent& b) const {
      return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
    }
  };
  std::priority_queue<NetEvent, std::vector<NetEvent>, Later> queue_;
};

// True iff the view holds at least 2f+1 blocks of `round`.
bool advance_round(const DagView& view, Round round);

}  // namespace lemonshark
