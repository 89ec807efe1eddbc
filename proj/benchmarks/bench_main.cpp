#include <benchmark/benchmark.h>

#include <memory>

#include "lemonshark/oracle.hpp"

using namespace lemonshark;

namespace {

Scenario scenario(std::uint32_t f, FinalityMode mode) {
  Scenario sc;
  sc.params = ProtocolParams::with_faults(f, 1);
  sc.rounds = 30;
  sc.mode = mode;
  sc.schedule.policy = RandomDelayPolicy{3};
  return sc;
}

// Complete DAG over `rounds` rounds, every block pointing at the full previous round.
void complete_dag(const ProtocolParams& p, Round rounds, DagView& view) {
  for (Round r = 1; r <= rounds; ++r)
    for (NodeId a = 0; a < p.n; ++a) {
      Block b;
      b.id = {a, r};
      b.shard = shard_in_charge(a, r, p);
      if (r > 1)
        for (BlockIndex i : view.round_blocks(r - 1)) b.parents.push_back(view.store().block(i).id);
      view.insert_block(b);
    }
}

void BM_Simulate(benchmark::State& st) {
  const auto mode = static_cast<FinalityMode>(st.range(1));
  const auto sc = scenario(static_cast<std::uint32_t>(st.range(0)), mode);
  for (auto _ : st) benchmark::DoNotOptimize(run(sc).final_tick);
  st.SetLabel(to_string(mode));
}
BENCHMARK(BM_Simulate)
    ->ArgsProduct({{1, 2, 3}, {static_cast<int>(FinalityMode::Lemonshark), static_cast<int>(FinalityMode::BullsharkBaseline)}})
    ->Unit(benchmark::kMillisecond);

void BM_OracleCheck(benchmark::State& st) {
  const auto r = run(scenario(static_cast<std::uint32_t>(st.range(0)), FinalityMode::Lemonshark));
  for (auto _ : st) benchmark::DoNotOptimize(oracle_check(r).sto_checked);
}
BENCHMARK(BM_OracleCheck)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_TryCommit(benchmark::State& st) {
  const auto p = ProtocolParams::with_faults(static_cast<std::uint32_t>(st.range(0)), 1);
  auto store = std::make_shared<BlockStore>(p);
  DagView view(store, 0);
  complete_dag(p, 60, view);
  const LeaderSchedule sched(p);
  for (auto _ : st) {
    LeaderRecord rec;
    benchmark::DoNotOptimize(try_commit(view, sched, rec, 60).size());
  }
}
BENCHMARK(BM_TryCommit)->Arg(1)->Arg(3)->Arg(5);

void BM_SortedHistory(benchmark::State& st) {
  const auto p = ProtocolParams::with_faults(static_cast<std::uint32_t>(st.range(0)), 1);
  auto store = std::make_shared<BlockStore>(p);
  DagView view(store, 0);
  complete_dag(p, 60, view);
  for (auto _ : st) benchmark::DoNotOptimize(sorted_history(view, BlockId{0, 60}).order.size());
}
BENCHMARK(BM_SortedHistory)->Arg(1)->Arg(3)->Arg(5);

}  // namespace

BENCHMARK_MAIN();
