#include "lemonshark/rbc_net.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "lemonshark/rng.hpp"

namespace lemonshark {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Broadcast: return "Broadcast";
    case EventKind::Deliver: return "Deliver";
    case EventKind::RoundAdvance: return "RoundAdvance";
    case EventKind::Query: return "Query";
    case EventKind::QueryReply: return "QueryReply";
  }
  return "?";
}

EventKind event_kind_from_string(const std::string& s) {
  for (auto k : {EventKind::Broadcast, EventKind::Deliver, EventKind::RoundAdvance, EventKind::Query, EventKind::QueryReply})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown event kind: " + s);
}

nlohmann::ordered_json to_json(const NetEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = std::to_string(e.seq);
  j["kind"] = to_string(e.kind);
  j["src"] = e.src;
  j["dst"] = e.dst;
  j["block"] = to_json(e.block);
  j["tick"] = std::to_string(e.tick);
  if (e.kind == EventKind::QueryReply) j["positive"] = e.positive;
  return j;
}

NetEvent net_event_from_json(const nlohmann::json& j) {
  NetEvent e;
  e.seq = u64_from_json(j.at("seq"));
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.src = j.at("src").get<NodeId>();
  e.dst = j.at("dst").get<NodeId>();
  e.block = block_id_from_json(j.at("block"));
  e.tick = u64_from_json(j.at("tick"));
  if (j.contains("positive")) e.positive = j.at("positive").get<bool>();
  return e;
}

std::string policy_name(const DelayPolicy& p) {
  switch (p.index()) {
    case 0: return "sync";
    case 1: return "random";
    case 2: return "partition";
    default: return "scripted";
  }
}

nlohmann::ordered_json to_json(const DelayPolicy& p) {
  nlohmann::ordered_json j;
  j["kind"] = policy_name(p);
  if (auto* r = std::get_if<RandomDelayPolicy>(&p)) j["max_ticks"] = r->max_ticks;
  if (auto* q = std::get_if<PartitionPolicy>(&p)) {
    j["groups"] = q->groups;
    j["lift_tick"] = q->lift_tick;
  }
  if (auto* s = std::get_if<ScriptedPolicy>(&p)) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : s->entries) {
      nlohmann::ordered_json x;
      x["author"] = e.author;
      x["round"] = e.round;
      x["dst"] = e.dst;
      if (e.delay) x["delay"] = *e.delay;
      if (e.at) x["at"] = *e.at;
      arr.push_back(std::move(x));
    }
    j["entries"] = std::move(arr);
  }
  return j;
}

DelayPolicy delay_policy_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "sync") return SyncPolicy{};
  if (kind == "random") {
    RandomDelayPolicy r;
    r.max_ticks = j.value("max_ticks", r.max_ticks);
    if (r.max_ticks < 1) throw ConfigError("random delay needs max_ticks >= 1");
    return r;
  }
  if (kind == "partition") {
    PartitionPolicy p;
    p.groups = j.at("groups").get<std::vector<std::vector<NodeId>>>();
    p.lift_tick = j.value("lift_tick", p.lift_tick);
    return p;
  }
  if (kind == "scripted") {
    ScriptedPolicy s;
    for (const auto& x : j.value("entries", nlohmann::json::array())) {
      ScriptedEntry e;
      e.author = x.at("author").get<NodeId>();
      e.round = x.at("round").get<Round>();
      e.dst = x.at("dst").get<NodeId>();
      if (x.contains("delay")) e.delay = x.at("delay").get<Tick>();
      if (x.contains("at")) e.at = x.at("at").get<Tick>();
      if (!e.delay && !e.at) throw ConfigError("scripted entry needs delay or at");
      s.entries.push_back(e);
    }
    return s;
  }
  throw ConfigError("unknown delay policy: " + kind);
}

bool AdversarySchedule::is_crashed(NodeId n) const {
  return std::find(crashed.begin(), crashed.end(), n) != crashed.end();
}

void AdversarySchedule::validate(const ProtocolParams& params) const {
  std::set<NodeId> uniq(crashed.begin(), crashed.end());
  if (uniq.size() != crashed.size()) throw ConfigError("duplicate crashed node");
  if (crashed.size() > params.f) throw ConfigError("more than f crashed nodes");
  for (NodeId c : crashed)
    if (c >= params.n) throw ConfigError("crashed node out of range");
  if (auto* p = std::get_if<PartitionPolicy>(&policy)) {
    std::set<NodeId> seen;
    for (const auto& g : p->groups)
      for (NodeId x : g) {
        if (x >= params.n) throw ConfigError("partition member out of range");
        if (!seen.insert(x).second) throw ConfigError("node in two partition groups");
      }
  }
}

std::vector<NodeId> choose_crashed(std::uint32_t n, std::uint32_t faults, std::uint64_t seed) {
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(keyed(seed, {0xc4a5ULL}));
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(faults, n));
  std::sort(all.begin(), all.end());
  return all;
}

Network::Network(ProtocolParams params, AdversarySchedule sched) : params_(params), sched_(std::move(sched)) {
  sched_.validate(params_);
  if (auto* s = std::get_if<ScriptedPolicy>(&sched_.policy))
    for (const auto& e : s->entries) script_[{e.author, e.round, e.dst}] = e;
  if (auto* p = std::get_if<PartitionPolicy>(&sched_.policy)) {
    // Nodes not listed form one implicit group.
    partition_group_.assign(params_.n, static_cast<NodeId>(p->groups.size()));
    for (std::size_t g = 0; g < p->groups.size(); ++g)
      for (NodeId x : p->groups[g]) partition_group_[x] = static_cast<NodeId>(g);
  }
}

NetEvent& Network::record(NetEvent e) {
  e.seq = log_.size();
  log_.push_back(e);
  return log_.back();
}

Tick Network::delivery_tick(const BlockId& b, NodeId dst, Tick now) const {
  if (dst == b.author) return now;
  return std::visit(
      [&](const auto& p) -> Tick {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SyncPolicy>) {
          return now + 1;
        } else if constexpr (std::is_same_v<P, RandomDelayPolicy>) {
          return now + 1 + keyed(sched_.seed, {0xde1aULL, b.author, b.round, dst}) % p.max_ticks;
        } else if constexpr (std::is_same_v<P, PartitionPolicy>) {
          if (partition_group_[b.author] == partition_group_[dst]) return now + 1;
          return std::max<Tick>(now + 1, p.lift_tick);
        } else {
          auto it = script_.find({b.author, b.round, dst});
          if (it == script_.end()) return now + 1;
          if (it->second.at) return std::max<Tick>(now + 1, *it->second.at);
          return now + std::max<Tick>(1, *it->second.delay);
        }
      },
      sched_.policy);
}

std::vector<NetEvent> Network::rbc_broadcast(NodeId node, const Block& b, Tick now) {
  std::vector<NetEvent> out;
  if (sched_.is_crashed(node) || b.id.author != node || suppressed(b.id)) return out;
  issued_.insert(b.id);
  record({0, EventKind::Broadcast, node, node, b.id, now, false});
  for (NodeId d = 0; d < params_.n; ++d) {
    if (sched_.is_crashed(d)) continue;
    NetEvent& e = record({0, EventKind::Deliver, node, d, b.id, delivery_tick(b.id, d, now), false});
    out.push_back(e);
    if (d != node) queue_.push(e);
  }
  return out;
}

MissingStatus Network::query_missing(NodeId querier, const BlockId& candidate, Tick now) {
  record({0, EventKind::Query, querier, querier, candidate, now, false});
  std::size_t polled = 0, positive = 0;
  for (NodeId d = 0; d < params_.n && polled < params_.quorum(); ++d) {
    if (sched_.is_crashed(d)) continue;
    ++polled;
    const bool voted = issued(candidate);
    if (voted) ++positive;
    record({0, EventKind::QueryReply, d, querier, candidate, now, voted});
  }
  if (positive >= params_.weak_quorum()) return MissingStatus::PossiblyExists;
  suppressed_.insert(candidate);
  return MissingStatus::DefinitelyMissing;
}

void Network::log_round_advance(NodeId node, Round round, Tick now) {
  record({0, EventKind::RoundAdvance, node, node, BlockId{node, round}, now, false});
}

Tick Network::next_tick() const {
  if (queue_.empty()) throw ProtocolError("network queue is empty");
  return queue_.top().tick;
}

std::vector<NetEvent> Network::pop_due(Tick t) {
  std::vector<NetEvent> out;
  while (!queue_.empty() && queue_.top().tick <= t) {
    out.push_back(queue_.top());
    queue_.pop();
  }
  return out;
}

bool advance_round(const DagView& view, Round round) {
  return view.round_count(round) >= view.params().quorum();
}

}  // namespace lemonshark
