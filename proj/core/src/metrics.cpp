#include "lemonshark/metrics.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace lemonshark {

namespace {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : (xs[m - 1] + xs[m]) / 2;
}

TypeStats summarize(const std::vector<const TxRow*>& rows) {
  TypeStats s;
  std::vector<double> lat, commit;
  for (const TxRow* r : rows) {
    ++s.total;
    if (r->sto_round) ++s.early;
    if (r->commit_round) commit.push_back(static_cast<double>(*r->commit_round) - r->prod_round);
    if (r->sto_round || r->commit_round) {
      ++s.finalized;
      const Round done = std::min(r->sto_round.value_or(~Round{0}), r->commit_round.value_or(~Round{0}));
      lat.push_back(static_cast<double>(done) - r->prod_round);
    }
  }
  s.early_rate = s.finalized ? static_cast<double>(s.early) / static_cast<double>(s.finalized) : 0;
  s.mean_latency = mean(lat);
  s.median_latency = median(lat);
  s.mean_commit_latency = mean(commit);
  s.median_commit_latency = median(commit);
  return s;
}

nlohmann::ordered_json stats_json(const TypeStats& s) {
  nlohmann::ordered_json j;
  j["total"] = s.total;
  j["finalized"] = s.finalized;
  j["early"] = s.early;
  j["early_rate"] = s.early_rate;
  j["mean_latency"] = s.mean_latency;
  j["median_latency"] = s.median_latency;
  j["mean_commit_latency"] = s.mean_commit_latency;
  j["median_commit_latency"] = s.median_commit_latency;
  return j;
}

std::string opt_str(const std::optional<Round>& r) { return r ? std::to_string(*r) : ""; }

}  // namespace

PersistStats persist_census(const BlockStore& store) {
  const auto& p = store.params();
  PersistStats ps;
  ps.min_bound = (3 * p.f + 2 + 1) / 2;
  ps.min_persisting = p.n;
  for (Round r = 1; r < store.max_round(); ++r) {
    std::vector<BlockIndex> cur, nxt;
    for (NodeId a = 0; a < p.n; ++a) {
      if (auto x = store.find(a, r); x != kNoBlock) cur.push_back(x);
      if (auto y = store.find(a, r + 1); y != kNoBlock) nxt.push_back(y);
    }
    if (cur.size() < p.n || nxt.size() < p.quorum()) continue;
    std::size_t persisting = 0;
    for (BlockIndex x : cur) {
      std::size_t c = 0;
      for (BlockIndex y : nxt) c += store.reaches(y, x) ? 1 : 0;
      if (c >= p.weak_quorum()) ++persisting;
    }
    ++ps.rounds_checked;
    ps.min_persisting = std::min(ps.min_persisting, persisting);
    if (persisting < ps.min_bound) ++ps.violations;
  }
  if (ps.rounds_checked == 0) ps.min_persisting = 0;
  return ps;
}

RunMetrics compute_metrics(const RunResult& run) {
  RunMetrics m;
  const auto& sc = run.scenario;
  const auto& store = *run.store;
  const auto& obs = run.observer();
  m.mode = to_string(sc.mode);
  m.seed = sc.seed;
  m.n = sc.params.n;
  m.f = sc.params.f;
  m.crashed = run.adversary.crashed;
  m.observer = obs.id;
  m.committed_leaders = obs.leaders.size();
  m.block_count = store.size();
  m.final_tick = run.final_tick;
  m.totality = run.totality;
  m.queries = run.queries;
  m.suppressed = run.suppressed;
  for (const auto& n : run.nodes) {
    m.indirect_skips = std::max(m.indirect_skips, n.indirect_skips);
    m.inconsistencies += n.inconsistencies;
  }

  std::vector<BlockIndex> order(store.size());
  for (BlockIndex i = 0; i < store.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](BlockIndex a, BlockIndex b) { return store.block(a).id < store.block(b).id; });
  for (BlockIndex i : order) {
    const Block& b = store.block(i);
    for (const auto& t : b.txs) {
      TxRow r;
      r.txid = t.txid;
      r.type = t.kind;
      r.chain = (t.txid >> 63) != 0;
      r.prod_round = b.id.round;
      if (const auto* e = obs.ledger.find(t.txid)) {
        r.sto_round = e->sto_round;
        r.commit_round = e->commit_round;
      }
      m.rows.push_back(r);
    }
  }
  std::vector<const TxRow*> all, a, be, g;
  for (const auto& r : m.rows) {
    all.push_back(&r);
    (r.type == TxKind::Alpha ? a : r.type == TxKind::Beta ? be : g).push_back(&r);
  }
  m.all = summarize(all);
  m.alpha = summarize(a);
  m.beta = summarize(be);
  m.gamma = summarize(g);

  // Early block finality relative to persistence, at the observer.
  std::map<BlockId, Round> commit_round;
  {
    std::map<BlockId, Round> leader_round;
    for (const auto& l : obs.leaders) leader_round[l.id] = l.commit_round;
    for (const auto& e : obs.executed) commit_round[e.block] = leader_round.at(e.leader);
  }
  std::map<BlockId, Round> sbo_round;
  for (const auto& [id, r] : obs.ledger.sbo_blocks()) sbo_round[id] = r;
  std::set<BlockId> leaders;
  for (const auto& l : obs.leaders) leaders.insert(l.id);
  for (BlockIndex i : order) {
    const Block& b = store.block(i);
    const Round r = b.id.round;
    if (leaders.count(b.id) || !commit_round.count(b.id)) continue;
    std::size_t c = 0;
    for (NodeId x = 0; x < sc.params.n; ++x)
      if (auto y = store.find(x, r + 1); y != kNoBlock && store.reaches(y, i)) ++c;
    if (c < sc.params.weak_quorum()) continue;
    ++m.blocks.nonleader_persisting;
    auto it = sbo_round.find(b.id);
    if (it != sbo_round.end() && it->second == r + 1) ++m.blocks.sbo_next_round;
    else ++m.blocks.sbo_late_or_missing;
    if (it != sbo_round.end() && it->second + 1 > commit_round.at(b.id)) ++m.blocks.early_violations;
  }

  m.persist = persist_census(store);

  std::vector<double> lucky_lat, unlucky_lat;
  for (const auto& gs : run.gamma) {
    if (!gs.placed) continue;
    const NodeId in_charge = author_in_charge(gs.target_shard, gs.target, sc.params);
    const bool unlucky = run.adversary.is_crashed(in_charge);
    const auto* e = obs.ledger.find(gs.t2);
    if (!e || (!e->sto_round && !e->commit_round)) continue;
    const Round done = std::min(e->sto_round.value_or(~Round{0}), e->commit_round.value_or(~Round{0}));
    const double lat = static_cast<double>(done) - gs.target;
    if (unlucky) {
      ++m.routing.unlucky;
      m.routing.unlucky_early += e->sto_round ? 1 : 0;
      unlucky_lat.push_back(lat);
    } else {
      ++m.routing.lucky;
      m.routing.lucky_early += e->sto_round ? 1 : 0;
      lucky_lat.push_back(lat);
    }
  }
  m.routing.lucky_latency = mean(lucky_lat);
  m.routing.unlucky_latency = mean(unlucky_lat);

  for (const auto& c : run.chains) m.chains.push_back({c.spec.client, c.completed_round, c.first_placed, c.aborts});
  return m;
}

nlohmann::ordered_json RunMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["seed"] = std::to_string(seed);
  j["n"] = n;
  j["f"] = f;
  j["crashed"] = crashed;
  j["observer"] = observer;
  j["all"] = stats_json(all);
  j["alpha"] = stats_json(alpha);
  j["beta"] = stats_json(beta);
  j["gamma"] = stats_json(gamma);
  j["blocks"] = {{"nonleader_persisting", blocks.nonleader_persisting},
                 {"sbo_next_round", blocks.sbo_next_round},
                 {"sbo_late_or_missing", blocks.sbo_late_or_missing},
                 {"early_violations", blocks.early_violations}};
  j["persist"] = {{"rounds_checked", persist.rounds_checked},
                  {"violations", persist.violations},
                  {"min_persisting", persist.min_persisting},
                  {"bound", persist.min_bound}};
  j["gamma_routing"] = {{"lucky", routing.lucky},
                        {"unlucky", routing.unlucky},
                        {"lucky_early", routing.lucky_early},
                        {"unlucky_early", routing.unlucky_early},
                        {"lucky_latency", routing.lucky_latency},
                        {"unlucky_latency", routing.unlucky_latency}};
  auto ch = nlohmann::ordered_json::array();
  for (const auto& c : chains) {
    nlohmann::ordered_json x;
    x["client"] = c.client;
    x["completed_round"] = c.completed_round ? nlohmann::ordered_json(*c.completed_round) : nlohmann::ordered_json(nullptr);
    x["first_round"] = c.first_round;
    x["aborts"] = c.aborts;
    ch.push_back(std::move(x));
  }
  j["chains"] = std::move(ch);
  j["committed_leaders"] = committed_leaders;
  j["indirect_skips"] = indirect_skips;
  j["inconsistencies"] = inconsistencies;
  j["queries"] = queries;
  j["suppressed"] = suppressed;
  j["blocks_total"] = block_count;
  j["final_tick"] = final_tick;
  j["totality"] = totality;
  j["oracle"] = oracle ? oracle->to_json() : nlohmann::ordered_json(nullptr);
  return j;
}

void write_csv(std::ostream& out, const RunMetrics& m) {
  out << "txid,type,prod_round,sto_round,commit_round,mode,seed\n";
  for (const auto& r : m.rows)
    out << r.txid << ',' << to_string(r.type) << ',' << r.prod_round << ',' << opt_str(r.sto_round) << ','
        << opt_str(r.commit_round) << ',' << m.mode << ',' << m.seed << '\n';
}

std::string metrics_csv(const RunMetrics& m) {
  std::ostringstream s;
  write_csv(s, m);
  return s.str();
}

}  // namespace lemonshark
