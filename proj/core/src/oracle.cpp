#include "lemonshark/oracle.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace lemonshark {

namespace {

enum class Kind { Steady, Fallback, Unknown };

class Global {
 public:
  Global(const ProtocolParams& p, const std::vector<Block>& blocks) : p_(p), sched_(p), blocks_(blocks) {
    std::sort(blocks_.begin(), blocks_.end(), [](const Block& a, const Block& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      idx_[blocks_[i].id] = i;
      top_ = std::max(top_, blocks_[i].id.round);
    }
    anc_.assign(blocks_.size(), std::vector<char>(blocks_.size(), 0));
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      anc_[i][i] = 1;
      for (const auto& par : blocks_[i].parents) {
        const std::size_t j = idx_.at(par);
        for (std::size_t k = 0; k <= j; ++k)
          if (anc_[j][k]) anc_[i][k] = 1;
      }
    }
    type_.assign(blocks_.size(), -1);
  }

  long at(NodeId a, Round r) const {
    auto it = idx_.find(BlockId{a, r});
    return it == idx_.end() ? -1 : static_cast<long>(it->second);
  }
  bool reach(long from, long to) const { return from >= 0 && to >= 0 && anc_[from][to]; }
  const Block& block(long i) const { return blocks_[i]; }
  std::size_t size() const { return blocks_.size(); }
  Round top() const { return top_; }
  const LeaderSchedule& sched() const { return sched_; }

  Kind kind_of(long x) {
    const Round r = blocks_[x].id.round;
    const std::uint32_t w = (r + 3) / 4;
    const long first = at(blocks_[x].id.author, 4 * w - 3);
    if (!reach(x, first)) return Kind::Unknown;
    return first_kind(first);
  }

  // Votes among blocks inside `scope` (-1 = whole DAG).
  std::size_t votes(long leader, Round vote_round, Kind want, long scope) {
    std::size_t c = 0;
    for (NodeId a = 0; a < p_.n; ++a) {
      const long x = at(a, vote_round);
      if (x < 0 || (scope >= 0 && !reach(scope, x))) continue;
      if (reach(x, leader) && kind_of(x) == want) ++c;
    }
    return c;
  }

 private:
  Kind first_kind(long first) {
    if (type_[first] >= 0) return static_cast<Kind>(type_[first]);
    const Round r = blocks_[first].id.round;
    const std::uint32_t w = (r + 3) / 4;
    Kind k = Kind::Fallback;
    if (w == 1) {
      k = Kind::Steady;
    } else {
      const Round s2r = 4 * (w - 1) - 1;
      const long s2 = at(sched_.steady_leader(s2r), s2r);
      const Round fr = 4 * (w - 1) - 3;
      const long fb = at(sched_.fallback_leader(w - 1), fr);
      if (reach(first, s2) && votes(s2, s2r + 1, Kind::Steady, first) >= p_.quorum()) k = Kind::Steady;
      else if (reach(first, fb) && votes(fb, fr + 3, Kind::Fallback, first) >= p_.quorum()) k = Kind::Steady;
    }
    type_[first] = static_cast<int>(k);
    return k;
  }

  ProtocolParams p_;
  LeaderSchedule sched_;
  std::vector<Block> blocks_;
  std::map<BlockId, std::size_t> idx_;
  std::vector<std::vector<char>> anc_;
  std::vector<int> type_;
  Round top_ = 0;
};

struct Cand {
  long block;
  bool steady;
  bool fallback;
};

std::vector<Cand> candidates(Global& g, Round r) {
  std::vector<Cand> out;
  const long s = g.at(g.sched().steady_leader(r), r);
  if (s >= 0) out.push_back({s, true, false});
  if (r % 4 == 1) {
    const long f = g.at(g.sched().fallback_leader((r + 3) / 4), r);
    if (f >= 0) {
      if (f == s) out.front().fallback = true;
      else out.push_back({f, false, true});
    }
  }
  return out;
}

bool direct(Global& g, const Cand& c, std::size_t q) {
  const Round r = g.block(c.block).id.round;
  if (c.steady && g.votes(c.block, r + 1, Kind::Steady, -1) >= q) return true;
  return c.fallback && g.votes(c.block, r + 3, Kind::Fallback, -1) >= q;
}

bool indirect(Global& g, const Cand& c, long scope, std::size_t weak) {
  const Round r = g.block(c.block).id.round;
  const Round first = 4 * ((r + 3) / 4) - 3;
  const long fb = g.at(g.sched().fallback_leader((r + 3) / 4), first);
  const std::size_t fbv = fb < 0 ? 0 : g.votes(fb, first + 3, Kind::Fallback, scope);
  if (c.steady && g.votes(c.block, r + 1, Kind::Steady, scope) >= weak && fbv < weak) return true;
  if (c.fallback) {
    std::size_t other = 0;
    for (Round sr : {first, first + 2}) {
      const long s = g.at(g.sched().steady_leader(sr), sr);
      if (s >= 0) other = std::max(other, g.votes(s, sr + 1, Kind::Steady, scope));
    }
    if (fbv >= weak && other < weak) return true;
  }
  return false;
}

std::vector<long> commit_order(Global& g, const ProtocolParams& p) {
  std::vector<long> out;
  Round next = 1;
  for (Round r = 1; r <= g.top(); r += 2) {
    if (r < next) continue;
    long hit = -1;
    for (const auto& c : candidates(g, r))
      if (direct(g, c, p.quorum())) {
        if (hit >= 0) throw ProtocolError("oracle: two direct commits in one slot");
        hit = c.block;
      }
    if (hit < 0) continue;
    std::vector<long> chain{hit};
    long cur = hit;
    for (Round s = r; s >= next + 2; s -= 2)
      for (const auto& c : candidates(g, s - 2)) {
        if (!g.reach(cur, c.block) || !indirect(g, c, cur, p.weak_quorum())) continue;
        chain.push_back(c.block);
        cur = c.block;
        break;
      }
    out.insert(out.end(), chain.rbegin(), chain.rend());
    next = r + 2;
  }
  return out;
}

struct Machine {
  std::map<Key, Value> kv;
  std::uint64_t version = 0;
  std::map<TxId, Outcome>* outcomes = nullptr;
  std::unordered_map<TxId, Transaction> parked;

  Value get(const Key& k) const {
    auto it = kv.find(k);
    return it == kv.end() ? 0 : it->second;
  }

  Outcome evaluate(const Transaction& t) const {
    Outcome o;
    o.txid = t.txid;
    std::uint64_t acc = 0;
    for (const auto& k : t.reads) {
      o.reads_seen.emplace_back(k, get(k));
      acc += static_cast<std::uint64_t>(get(k));
    }
    Value v = t.body.arg;
    if (t.body.op == Body::Op::CopyReadToWrite) v = static_cast<Value>(acc);
    if (t.body.op == Body::Op::AddReadToWrite) v = static_cast<Value>(acc + static_cast<std::uint64_t>(t.body.arg));
    for (const auto& k : t.writes) o.writes_applied.emplace_back(k, v);
    return o;
  }

  void commit(const Outcome& o) {
    for (const auto& [k, v] : o.writes_applied) kv[k] = v;
    ++version;
    (*outcomes)[o.txid] = o;
  }

  void single(const Transaction& t) {
    if (t.condition) {
      auto it = outcomes->find(t.condition->pred);
      if (it == outcomes->end() || it->second.aborted || !(it->second == t.condition->expected)) {
        Outcome o;
        o.txid = t.txid;
        o.aborted = true;
        (*outcomes)[t.txid] = o;
        return;
      }
    }
    commit(evaluate(t));
  }

  void pair(const Transaction& a, const Transaction& b) {
    const Outcome oa = evaluate(a), ob = evaluate(b);
    commit(oa);
    commit(ob);
  }

  void run(const std::vector<const Transaction*>& seq) {
    std::unordered_map<TxId, std::size_t> last_pos;
    for (std::size_t i = 0; i < seq.size(); ++i) last_pos[seq[i]->txid] = i;
    std::unordered_map<TxId, const Transaction*> waiting;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const Transaction& t = *seq[i];
      if (t.kind != TxKind::GammaSub) {
        single(t);
        continue;
      }
      const TxId q = *t.partner;
      if (auto it = parked.find(q); it != parked.end()) {
        pair(it->second, t);
        parked.erase(it);
      } else if (auto w = waiting.find(q); w != waiting.end()) {
        pair(*w->second, t);
        waiting.erase(w);
      } else if (auto l = last_pos.find(q); l != last_pos.end() && l->second > i) {
        waiting[t.txid] = &t;
      } else {
        parked[t.txid] = t;
      }
    }
  }
};

}  // namespace

OracleTrace oracle_replay(const ProtocolParams& params, const std::vector<Block>& blocks) {
  Global g(params, blocks);
  OracleTrace tr;
  Machine m;
  m.outcomes = &tr.outcomes;
  std::vector<char> done(g.size(), 0);
  Round floor = 1;
  for (long leader : commit_order(g, params)) {
    std::vector<long> hist;
    for (long x = 0; x < static_cast<long>(g.size()); ++x)
      if (!done[x] && g.reach(leader, x) && g.block(x).id.round >= floor) hist.push_back(x);
    // Blocks are indexed in (round, author) order already.
    std::vector<const Transaction*> seq;
    for (long x : hist) {
      done[x] = 1;
      for (const auto& t : g.block(x).txs) seq.push_back(&t);
    }
    m.run(seq);
    const BlockId id = g.block(leader).id;
    tr.leaders.push_back(id);
    tr.state_after.push_back(m.kv);
    tr.version_after.push_back(m.version);
    floor = id.round + 2 > params.v ? id.round + 2 - params.v : 1;
  }
  return tr;
}

std::size_t OracleReport::failures() const {
  return leader_conflicts + state_divergences + final_mismatches + sto_mismatches + cross_node_conflicts +
         earliness_violations + double_executions;
}

nlohmann::ordered_json OracleReport::to_json() const {
  nlohmann::ordered_json j;
  j["verdict"] = pass() ? "pass" : "fail";
  j["leader_conflicts"] = leader_conflicts;
  j["state_divergences"] = state_divergences;
  j["final_mismatches"] = final_mismatches;
  j["sto_mismatches"] = sto_mismatches;
  j["sto_checked"] = sto_checked;
  j["sto_unchecked"] = sto_unchecked;
  j["cross_node_conflicts"] = cross_node_conflicts;
  j["earliness_violations"] = earliness_violations;
  j["double_executions"] = double_executions;
  j["oracle_leaders"] = oracle_leaders;
  j["details"] = details;
  return j;
}

OracleReport oracle_compare(const OracleTrace& tr, const std::vector<NodeReport>& nodes) {
  OracleReport rep;
  rep.oracle_leaders = tr.leaders.size();
  auto note = [&rep](std::string s) {
    if (rep.details.size() < 20) rep.details.push_back(std::move(s));
  };
  std::map<TxId, std::pair<NodeId, Outcome>> first_sto;
  for (const auto& n : nodes) {
    const std::string who = "node " + std::to_string(n.id) + ": ";
    bool prefix = n.leaders.size() <= tr.leaders.size();
    for (std::size_t i = 0; prefix && i < n.leaders.size(); ++i) prefix = n.leaders[i].id == tr.leaders[i];
    if (!prefix) {
      ++rep.leader_conflicts;
      note(who + "committed leaders are not a prefix of the global order");
    } else {
      const std::size_t k = n.leaders.size();
      std::map<Key, Value> expect = k ? tr.state_after[k - 1] : std::map<Key, Value>{};
      const std::uint64_t ver = k ? tr.version_after[k - 1] : 0;
      if (n.state.entries() != expect || n.state.version != ver) {
        ++rep.state_divergences;
        note(who + "state differs from the global prefix after " + std::to_string(k) + " leaders");
      }
    }
    std::set<BlockId> seen;
    for (const auto& e : n.executed)
      if (!seen.insert(e.block).second) {
        ++rep.double_executions;
        note(who + "block " + to_string(e.block) + " executed twice");
      }
    for (const auto& [id, e] : n.ledger.entries()) {
      const auto it = tr.outcomes.find(id);
      if (e.final_outcome && (it == tr.outcomes.end() || !(it->second == *e.final_outcome))) {
        ++rep.final_mismatches;
        note(who + "final outcome of tx " + std::to_string(id) + " differs");
      }
      if (e.sto_outcome) {
        if (it == tr.outcomes.end()) {
          ++rep.sto_unchecked;
        } else {
          ++rep.sto_checked;
          if (!(it->second == *e.sto_outcome)) {
            ++rep.sto_mismatches;
            note(who + "STO of tx " + std::to_string(id) + " differs from its execution prefix");
          }
        }
        auto [pos, fresh] = first_sto.try_emplace(id, n.id, *e.sto_outcome);
        if (!fresh && !(pos->second.second == *e.sto_outcome)) {
          ++rep.cross_node_conflicts;
          note(who + "STO of tx " + std::to_string(id) + " disagrees with node " + std::to_string(pos->second.first));
        }
        const bool later_tick = e.commit_tick && *e.sto_tick > *e.commit_tick;
        const bool later_seq = e.commit_seq && e.sto_seq && *e.sto_seq >= *e.commit_seq;
        if (e.commit_round && (later_tick || later_seq || *e.sto_round > *e.commit_round)) {
          ++rep.earliness_violations;
          note(who + "STO of tx " + std::to_string(id) + " was not earlier than its commit");
        }
      }
    }
  }
  return rep;
}

OracleReport oracle_check(const RunResult& run) {
  std::vector<Block> blocks;
  blocks.reserve(run.store->size());
  for (BlockIndex i = 0; i < run.store->size(); ++i) blocks.push_back(run.store->block(i));
  return oracle_compare(oracle_replay(run.scenario.params, blocks), run.nodes);
}

}  // namespace lemonshark
