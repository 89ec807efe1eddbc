#include "lemonshark/simulator.hpp"

#include <algorithm>

namespace lemonshark {

const NodeReport* RunResult::node(NodeId id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

namespace {

Block make_block(Replica& me, Round r, Workload& wl, ChainDriver* chains, Round last_workload_round) {
  const auto& view = me.view();
  const auto& params = view.params();
  Block b;
  b.id = BlockId{me.id(), r};
  b.shard = shard_in_charge(me.id(), r, params);
  if (r > 1)
    for (BlockIndex p : view.round_blocks(r - 1)) b.parents.push_back(view.store().block(p).id);
  std::sort(b.parents.begin(), b.parents.end());
  auto spec = [&me](const BlockId& at, std::size_t i) { return speculate_outcome(me.view(), me.commit(), at, i); };
  auto in_view = [&me](const BlockId& at) { return me.view().contains(at); };
  b.txs = wl.build(me.id(), r, r > last_workload_round, chains, spec, in_view);
  return b;
}

}  // namespace

RunResult run(const Scenario& sc, const RunOptions& opt) {
  sc.validate();
  RunResult res;
  res.scenario = sc;
  res.adversary = opt.adversary ? *opt.adversary : sc.adversary();
  res.store = std::make_shared<BlockStore>(sc.params);
  Network net(sc.params, res.adversary);
  LeaderSchedule sched(sc.params);
  Workload wl(sc);
  std::optional<ChainDriver> chains;
  if (opt.chains && !sc.workload.chains.empty()) chains.emplace(sc.workload.chains, sc.workload.chain_mode, sc.params.n);

  std::vector<std::unique_ptr<Replica>> nodes;
  for (NodeId i = 0; i < sc.params.n; ++i)
    if (!res.adversary.is_crashed(i)) nodes.push_back(std::make_unique<Replica>(i, res.store, sched, sc.mode));
  std::vector<Replica*> by_id(sc.params.n, nullptr);
  for (auto& r : nodes) by_id[r->id()] = r.get();
  Replica& observer = *nodes.front();
  const Round last = sc.last_round();

  Tick t = 0;
  for (;; ++t) {
    if (t > sc.max_ticks) {
      std::string where;
      for (const auto& r : nodes) where += " " + std::to_string(r->id()) + "@" + std::to_string(r->round());
      throw ProtocolError("tick budget exhausted at tick " + std::to_string(t) + ";" + where);
    }
    for (const auto& e : net.pop_due(t))
      if (e.kind == EventKind::Deliver) by_id[e.dst]->receive(res.store->find(e.block));

    for (auto& r : nodes) {
      r->step(t, net);
      auto next = r->ready(t, sc.leader_timeout, last);
      if (!next) continue;
      const BlockId id{r->id(), *next};
      if (net.suppressed(id)) {
        r->skip_to(*next);
        continue;
      }
      Block b = make_block(*r, *next, wl, chains ? &*chains : nullptr, sc.rounds);
      r->adopt_own(b);
      net.rbc_broadcast(r->id(), b, t);
      net.log_round_advance(r->id(), *next, t);
      // Evaluate again so the new round is visible to this tick's finality checks.
      r->step(t, net);
    }
    if (chains) chains->resolve(observer.engine().ledger(), observer.round());

    const bool done = std::all_of(nodes.begin(), nodes.end(), [&](const auto& r) { return r->round() >= last; });
    if (done && net.idle()) break;
  }

  res.final_tick = t;
  res.events = net.log();
  res.queries = static_cast<std::size_t>(
      std::count_if(res.events.begin(), res.events.end(), [](const NetEvent& e) { return e.kind == EventKind::Query; }));
  res.suppressed = net.suppressed_count();
  for (auto& r : nodes) {
    NodeReport rep;
    rep.id = r->id();
    rep.round = r->round();
    rep.leaders = r->record().committed;
    rep.ledger = r->engine().ledger();
    rep.state = r->commit().state;
    rep.executed = r->executed();
    rep.indirect_skips = r->record().indirect_skips;
    rep.inconsistencies = r->engine().run_inconsistencies();
    rep.view_size = r->view().delivered_order().size();
    if (rep.view_size != res.store->size()) res.totality = false;
    res.nodes.push_back(std::move(rep));
  }
  if (chains) res.chains = chains->chains();
  res.gamma = wl.gamma_submissions();
  return res;
}

RunResult replay(const Scenario& sc, const std::vector<NodeId>& crashed, const std::vector<NetEvent>& log) {
  ScriptedPolicy p;
  for (const auto& e : log)
    if (e.kind == EventKind::Deliver && e.src != e.dst) p.entries.push_back({e.src, e.block.round, e.dst, std::nullopt, e.tick});
  RunOptions opt;
  AdversarySchedule a;
  a.seed = sc.schedule.seed.value_or(sc.seed);
  a.crashed = crashed;
  a.policy = std::move(p);
  opt.adversary = std::move(a);
  return run(sc, opt);
}

}  // namespace lemonshark
