// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any line fails.
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "lemonshark/event_log.hpp"
#include "lemonshark/fuzz.hpp"
#include "lemonshark/workload.hpp"
#include "support.hpp"

using namespace lemonshark;

namespace {

// Pinned tolerances.
constexpr std::size_t kFuzzRuns = 1000;
constexpr std::size_t kNaiveRuns = 200;
constexpr double kMinRoundReduction = 0.30;
constexpr int kImpossibilitySeeds = 10;
constexpr int kReplaySeeds = 100;
constexpr int kChainRuns = 100;

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

Scenario base(std::uint32_t f, std::uint64_t seed, Round rounds) {
  Scenario sc;
  sc.params = ProtocolParams::with_faults(f, seed);
  sc.seed = seed;
  sc.rounds = rounds;
  return sc;
}

void all_alpha(WorkloadSpec& w) {
  w.alpha_pct = 100;
  w.beta_pct = 0;
  w.gamma_pct = 0;
  w.cross_shard_block_pct = 0;
}

FuzzReport a0_and_a3() {
  FuzzCampaign c;
  c.runs = kFuzzRuns;
  const FuzzReport rep = fuzz(c);

  FuzzCampaign naive;
  naive.runs = kNaiveRuns;
  naive.mode = FinalityMode::Naive;
  naive.adversarial_only = true;
  const FuzzReport nrep = fuzz(naive);

  const bool ok = rep.runs >= kFuzzRuns && rep.failures == 0 && rep.sto_mismatches == 0 &&
                  rep.state_divergences == 0 && rep.leader_conflicts == 0 && nrep.sto_mismatches > 0;
  report("A0", ok,
         fmt("runs=%zu failures=%zu errors=%zu sto_checked=%zu sto_mismatches=%zu state_divergences=%zu "
             "leader_conflicts=%zu | naive adversarial runs=%zu failing=%zu sto_mismatches=%zu",
             rep.runs, rep.failures, rep.errors, rep.sto_checked, rep.sto_mismatches, rep.state_divergences,
             rep.leader_conflicts, nrep.runs, nrep.failures, nrep.sto_mismatches));
  return rep;
}

void a1() {
  std::size_t blocks = 0, sbo = 0, early_bad = 0, runs = 0;
  double sum_reduction = 0;
  for (std::uint32_t f : {1u, 2u})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Scenario sc = base(f, seed, 40);
      all_alpha(sc.workload);
      const auto m = compute_metrics(run(sc));
      sc.mode = FinalityMode::BullsharkBaseline;
      const auto b = compute_metrics(run(sc));
      blocks += m.blocks.nonleader_persisting;
      sbo += m.blocks.sbo_next_round;
      early_bad += m.blocks.early_violations;
      sum_reduction += 1.0 - m.all.mean_latency / b.all.mean_latency;
      ++runs;
    }
  const double reduction = sum_reduction / runs;
  report("A1", blocks > 0 && sbo == blocks && early_bad == 0 && reduction >= kMinRoundReduction,
         fmt("runs=%zu persisting_nonleader=%zu sbo_at_r+1=%zu late_sto=%zu mean_round_reduction=%.3f (min %.2f)",
             runs, blocks, sbo, early_bad, reduction, kMinRoundReduction));
}

void a2() {
  int naive_caught = 0, safe = 0;
  std::size_t early_sto = 0, later_sto = 0;
  for (int s = 1; s <= kImpossibilitySeeds; ++s) {
    Scenario sc = base(1, s, 16);
    all_alpha(sc.workload);
    sc.workload.keys_per_shard = 1;
    sc.workload.txs_per_block = 4;
    // X's round-5 block reaches Y late, so Y's round-6 block of the same shard omits it.
    const LeaderSchedule sched(sc.params);
    const NodeId x = (sched.steady_leader(5) + 1) % sc.params.n;
    const NodeId y = (x + sc.params.n - 1) % sc.params.n;
    ScriptedEntry e;
    e.author = x;
    e.round = 5;
    e.dst = y;
    e.delay = 40;
    sc.schedule.policy = ScriptedPolicy{{e}};

    sc.mode = FinalityMode::Naive;
    if (oracle_check(run(sc)).sto_mismatches >= 1) ++naive_caught;

    sc.mode = FinalityMode::Lemonshark;
    const auto r = run(sc);
    const auto rep = oracle_check(r);
    Tick arrival = 0;
    for (const auto& ev : r.events)
      if (ev.kind == EventKind::Deliver && ev.dst == y && ev.block == BlockId{x, 5}) arrival = ev.tick;
    std::size_t premature = 0;
    const auto* ny = r.node(y);
    for (std::size_t i = 0; i < sc.workload.txs_per_block; ++i)
      for (const auto& n : r.nodes) {
        const auto* le = n.ledger.find(block_txid(y, 6, i));
        if (!le || !le->sto_tick) continue;
        if (&n == ny && *le->sto_tick < arrival) ++premature;
        else ++later_sto;
      }
    early_sto += premature;
    if (rep.sto_mismatches == 0 && rep.pass() && premature == 0) ++safe;
  }
  report("A2", naive_caught == kImpossibilitySeeds && safe == kImpossibilitySeeds,
         fmt("seeds=%d naive_with_mismatch=%d lemonshark_clean=%d sto_to_affected_block_before_conflict_seen=%zu "
             "(sto awarded after the conflicting block is known: %zu)",
             kImpossibilitySeeds, naive_caught, safe, early_sto, later_sto));
}

// Returns true when the pair finalizes to the swapped values; `detail` collects the case summary.
bool swap_case(int which, std::string& detail) {
  using namespace lstest;
  constexpr Value apple = 1, orange = 2;
  const auto p = ProtocolParams::with_faults(1, 7);
  DagBuilder d(p);
  const Round ra = which == 2 ? 3 : 4;
  const Round rb = which == 3 ? 5 : 4;
  auto free_slot = [&](std::uint32_t s, Round r) {
    return r % 2 == 0 || author_in_charge(s, r, p) != d.sched.steady_leader(r);
  };
  std::optional<std::pair<std::uint32_t, std::uint32_t>> pick;
  for (std::uint32_t a = 0; a < p.n && !pick; ++a)
    for (std::uint32_t b = 0; b < p.n && !pick; ++b)
      if (a != b && free_slot(a, ra) && free_slot(b, rb)) pick = {a, b};
  if (!pick) return false;
  const auto [sa, sb] = *pick;
  const Key ka{sa, 0}, kb{sb, 0};
  d.txs[BlockId{author_in_charge(sa, 1, p), 1}] = {put_tx(1, ka, apple)};
  d.txs[BlockId{author_in_charge(sb, 1, p), 1}] = {put_tx(2, kb, orange)};
  const BlockId ba{author_in_charge(sa, ra, p), ra}, bb{author_in_charge(sb, rb, p), rb};
  d.txs[ba] = {swap_half(10, 11, ka, kb)};
  d.txs[bb] = {swap_half(11, 10, kb, ka)};

  FinalityEngine eng(p, FinalityMode::Lemonshark);
  LeaderRecord rec;
  CommitContext ctx;
  std::vector<FinalizedBlock> ex;
  bool delayed = false;
  for (Round r = 1; r <= 14; ++r) {
    d.build(r);
    for (BlockIndex b : d.view.round_blocks(r)) eng.on_block(d.view, b);
    auto fresh = try_commit(d.view, d.sched, rec, r);
    if (!fresh.empty()) {
      auto outs = finalize_committed(ctx, d.view, fresh, p.v, &ex);
      d.view.last_committed_leader = rec.last();
      eng.on_final(outs, r, r);
    }
    NodeContext nc{d.view, d.sched, rec, ctx, r, r, [](const BlockId&) { return MissingStatus::PossiblyExists; }};
    eng.evaluate(nc);
    delayed |= eng.delay_list().contains(10) || eng.delay_list().contains(11);
  }
  auto leader_of = [&](const BlockId& b) {
    for (const auto& e : ex)
      if (e.block == b) return e.leader;
    return BlockId{};
  };
  const bool same_leader = leader_of(ba) == leader_of(bb);
  bool sto_ok = true;
  for (TxId t : {TxId{10}, TxId{11}}) {
    const auto* e = eng.ledger().find(t);
    if (e && e->sto_outcome && (!e->final_outcome || !(*e->sto_outcome == *e->final_outcome))) sto_ok = false;
  }
  const bool ok = ctx.state.get(ka) == orange && ctx.state.get(kb) == apple && ctx.parked.empty() &&
                  same_leader == (which != 3) && sto_ok && (which != 3 || delayed);
  detail += fmt(" case%d(rounds %u/%u, %s leader%s)=%s", which, ra, rb, same_leader ? "same" : "different",
                which == 3 ? (delayed ? ", delay-listed" : ", not delay-listed") : "", ok ? "swapped" : "wrong");
  return ok;
}

void a4() {
  std::string detail;
  bool ok = true;
  for (int c = 1; c <= 3; ++c) ok &= swap_case(c, detail);
  // Plain sequential application of the same two halves.
  KvState base_state;
  base_state.put(Key{0, 0}, 1);
  base_state.put(Key{1, 0}, 2);
  Overlay ov(base_state);
  OutcomeMap run_map;
  apply_transaction(lstest::swap_half(10, 11, Key{0, 0}, Key{1, 0}), ov, run_map, nullptr);
  apply_transaction(lstest::swap_half(11, 10, Key{1, 0}, Key{0, 0}), ov, run_map, nullptr);
  const bool naive_wrong = ov.get(Key{0, 0}) == ov.get(Key{1, 0});
  detail += fmt(" | sequential: both keys = %lld", static_cast<long long>(ov.get(Key{0, 0})));
  report("A4", ok && naive_wrong, detail);
}

void a5() {
  std::string detail;
  bool ok = true;
  std::size_t lucky = 0, unlucky = 0, lucky_early = 0, unlucky_early = 0;
  double lucky_lat = 0, unlucky_lat = 0;
  int lat_runs = 0;
  std::size_t placed_in_crashed_slot = 0;
  for (std::uint32_t f : {2u, 3u}) {
    std::vector<double> beta_rates, gamma_rates;
    std::vector<std::uint32_t> levels{0, 1, f};
    for (std::uint32_t faults : levels) {
      std::size_t be = 0, bt = 0, ge = 0, gt = 0;
      for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Scenario sc = base(f, 100 * f + seed, 30);
        sc.schedule.faults = faults;
        sc.schedule.policy = RandomDelayPolicy{3};
        sc.workload.cross_shard_block_pct = 100;
        const auto r = run(sc);
        const auto m = compute_metrics(r);
        for (const auto& g : r.gamma)
          if (g.placed && r.adversary.is_crashed(author_in_charge(g.target_shard, g.target, sc.params)) &&
              g.placed->round <= g.target)
            ++placed_in_crashed_slot;
        be += m.beta.early;
        bt += m.beta.total;
        ge += m.gamma.early;
        gt += m.gamma.total;
        if (faults > 0 && m.routing.lucky && m.routing.unlucky) {
          lucky += m.routing.lucky;
          unlucky += m.routing.unlucky;
          lucky_early += m.routing.lucky_early;
          unlucky_early += m.routing.unlucky_early;
          lucky_lat += m.routing.lucky_latency;
          unlucky_lat += m.routing.unlucky_latency;
          ++lat_runs;
        }
      }
      beta_rates.push_back(bt ? double(be) / bt : 0);
      gamma_rates.push_back(gt ? double(ge) / gt : 0);
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
      ok &= beta_rates[i] <= beta_rates[i - 1] && gamma_rates[i] <= gamma_rates[i - 1];
      ok &= beta_rates[i] > 0 && gamma_rates[i] > 0;
    }
    ok &= beta_rates.back() < beta_rates.front() && gamma_rates.back() < gamma_rates.front();
    detail += fmt(" n=%u beta[0,1,%u]=%.3f,%.3f,%.3f gamma=%.3f,%.3f,%.3f;", 3 * f + 1, f, beta_rates[0],
                  beta_rates[1], beta_rates[2], gamma_rates[0], gamma_rates[1], gamma_rates[2]);
  }
  const double lr = lucky ? double(lucky_early) / lucky : 0, ur = unlucky ? double(unlucky_early) / unlucky : 0;
  const double ll = lat_runs ? lucky_lat / lat_runs : 0, ul = lat_runs ? unlucky_lat / lat_runs : 0;
  ok &= unlucky > 0 && ul > ll && placed_in_crashed_slot == 0;
  detail += fmt(" gamma partner routed to a crashed author's slot: %zu txs, latency %.2f vs %.2f rounds elsewhere, "
                "placed before rotation %zu, early %.3f vs %.3f",
                unlucky, ul, ll, placed_in_crashed_slot, ur, lr);
  report("A5", ok, detail);
}

void a6() {
  FuzzCampaign c;
  c.runs = kReplaySeeds;
  c.base_seed = 5000;
  int same = 0, total = 0;
  for (const auto& [label, sc] : fuzz_grid(c)) {
    ++total;
    const auto r = run(sc);
    std::stringstream io;
    write_event_log(io, EventLog{r.scenario, r.adversary.crashed, r.events});
    const std::string bytes = io.str();
    std::stringstream in(bytes);
    const auto log = read_event_log(in);
    const auto back = replay(log.scenario, log.crashed, log.events);
    bool eq = compute_metrics(r).to_json().dump() == compute_metrics(back).to_json().dump();
    eq &= r.nodes.size() == back.nodes.size();
    for (std::size_t i = 0; eq && i < r.nodes.size(); ++i)
      eq &= r.nodes[i].state.to_json().dump() == back.nodes[i].state.to_json().dump();
    std::stringstream again;
    write_event_log(again, EventLog{back.scenario, back.adversary.crashed, back.events});
    eq &= again.str() == bytes;
    same += eq;
  }
  report("A6", same == total && total == kReplaySeeds,
         fmt("runs=%d identical_metrics_state_and_log=%d", total, same));
}

// Final state of `r`'s observer recomputed from the same DAG with aborted conditionals removed.
bool stripped_equivalent(const RunResult& r) {
  const auto& obs = r.observer();
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < r.store->size(); ++i) {
    Block b = r.store->block(i);
    std::erase_if(b.txs, [&](const Transaction& t) {
      if (!t.condition) return false;
      const auto* e = obs.ledger.find(t.txid);
      return e && e->final_outcome && e->final_outcome->aborted;
    });
    blocks.push_back(std::move(b));
  }
  const auto tr = oracle_replay(r.scenario.params, blocks);
  if (obs.leaders.empty() || tr.state_after.size() < obs.leaders.size()) return false;
  return tr.state_after[obs.leaders.size() - 1] == obs.state.entries();
}

void a7() {
  int equivalent = 0, unchained_equal = 0, faster_or_equal = 0, complete = 0;
  std::size_t aborts = 0, conditionals = 0;
  double pipe_sum = 0, seq_sum = 0;
  std::size_t chain_count = 0;
  for (int s = 1; s <= kChainRuns; ++s) {
    Scenario sc = base(1 + s % 2, 700 + s, 24);
    sc.schedule.policy = s % 3 ? DelayPolicy{RandomDelayPolicy{1 + static_cast<Tick>(s % 4)}} : DelayPolicy{SyncPolicy{}};
    sc.workload.cross_shard_failure_pct = 20;
    sc.workload.chains = {ChainSpec{0, 3, static_cast<std::uint32_t>(s % 4), TxKind::Alpha},
                          ChainSpec{1, 4, static_cast<std::uint32_t>((s + 1) % 4), TxKind::Beta}};
    sc.workload.chain_mode = ChainMode::Pipelined;
    const auto r = run(sc);
    for (std::size_t i = 0; i < r.store->size(); ++i)
      for (const auto& t : r.store->block(i).txs) conditionals += t.condition ? 1 : 0;
    equivalent += stripped_equivalent(r) && oracle_check(r).pass();

    RunOptions off;
    off.chains = false;
    const auto u = run(sc, off);
    auto without_chain_keys = [](const KvState& st) {
      std::map<Key, Value> m;
      for (const auto& [k, v] : st.entries())
        if (k.key < 2000) m[k] = v;
      return m;
    };
    unchained_equal += u.observer().leaders.size() == r.observer().leaders.size() &&
                       without_chain_keys(u.observer().state) == without_chain_keys(r.observer().state);

    sc.workload.chain_mode = ChainMode::Sequential;
    const auto q = run(sc);
    bool le = true, done = true;
    for (std::size_t c = 0; c < r.chains.size(); ++c) {
      const auto& pc = r.chains[c].completed_round;
      const auto& qc = q.chains[c].completed_round;
      aborts += r.chains[c].aborts;
      done &= pc.has_value();
      if (!pc) le = false;
      else if (qc && *pc > *qc) le = false;
      if (pc && qc) {
        pipe_sum += *pc;
        seq_sum += *qc;
        ++chain_count;
      }
    }
    faster_or_equal += le;
    complete += done;
  }
  const bool ok = equivalent == kChainRuns && unchained_equal == kChainRuns && faster_or_equal == kChainRuns &&
                  complete == kChainRuns;
  report("A7", ok,
         fmt("runs=%d stripped_reexecution_equal=%d chains_off_state_equal=%d completion_le_sequential=%d "
             "conditional_txs=%zu aborts=%zu mean_completion pipelined=%.2f sequential=%.2f",
             kChainRuns, equivalent, unchained_equal, faster_or_equal, conditionals, aborts,
             chain_count ? pipe_sum / chain_count : 0.0, chain_count ? seq_sum / chain_count : 0.0));
}

}  // namespace

int main() {
  try {
    const FuzzReport rep = a0_and_a3();
    a1();
    a2();
    const auto bound = [](std::uint32_t f) { return (3 * f + 2 + 1) / 2; };
    report("A3", rep.persist_rounds > 0 && rep.persist_violations == 0,
           fmt("rounds_checked=%zu violations=%zu bound f=1,2,3 -> %u,%u,%u", rep.persist_rounds,
               rep.persist_violations, bound(1), bound(2), bound(3)));
    a4();
    a5();
    a6();
    a7();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
