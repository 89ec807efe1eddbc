#include <doctest.h>

#include "lemonshark/early_finality.hpp"
#include "support.hpp"

using namespace lstest;

namespace {

constexpr Value kApple = 1, kOrange = 2;

struct SwapSetup {
  std::uint32_t sa = 0, sb = 1;
  Round ra = 0, rb = 0;
};

// Commits everything in a complete DAG and returns the committing context.
CommitContext commit_all(DagBuilder& d, Round upto, std::vector<FinalizedBlock>* executed) {
  d.build(upto);
  LeaderRecord rec;
  const auto leaders = try_commit(d.view, d.sched, rec, upto);
  CommitContext ctx;
  finalize_committed(ctx, d.view, leaders, d.params.v, executed);
  return ctx;
}

BlockId leader_of(const std::vector<FinalizedBlock>& ex, const BlockId& b) {
  for (const auto& e : ex)
    if (e.block == b) return e.leader;
  FAIL("block never executed");
  return {};
}

}  // namespace

TEST_SUITE("ordering-exec") {
  TEST_CASE("sorted history is topological and ordered by round then author") {
    DagBuilder d(ProtocolParams::with_faults(2, 1));
    d.absent = {{3, 2}, {5, 4}};
    d.build(8);
    const auto h = sorted_history(d.view, BlockId{0, 8});
    const auto& s = *d.store;
    for (std::size_t i = 0; i < h.order.size(); ++i) {
      if (i) CHECK(s.block(h.order[i - 1]).id < s.block(h.order[i]).id);
      for (std::size_t j = i + 1; j < h.order.size(); ++j) CHECK_FALSE(s.reaches(h.order[i], h.order[j]));
    }
    CHECK(s.block(h.order.back()).id == BlockId{0, 8});
  }

  TEST_CASE("watermark excludes rounds at or below the look-back horizon") {
    CHECK(watermark_for(std::nullopt, 8) == 1);
    CHECK(watermark_for(BlockId{0, 9}, 8) == 3);
    CHECK(watermark_for(BlockId{0, 3}, 8) == 1);
    CHECK(watermark_for(BlockId{2, 21}, 4) == 19);
  }

  TEST_CASE("conditional transactions abort unless the predecessor outcome matches") {
    KvState base;
    Overlay ov(base);
    OutcomeMap run;
    const Key k{0, 0};
    run[1] = apply_transaction(put_tx(1, k, 5), ov, run, nullptr);

    Transaction c = put_tx(2, k, 7);
    c.condition = Condition{1, run[1]};
    const auto ok = apply_transaction(c, ov, run, nullptr);
    CHECK_FALSE(ok.aborted);
    CHECK(ov.get(k) == 7);

    Transaction bad = put_tx(3, k, 9);
    Outcome other = run[1];
    other.writes_applied[0].second = 6;
    bad.condition = Condition{1, other};
    const auto ab = apply_transaction(bad, ov, run, nullptr);
    CHECK(ab.aborted);
    CHECK(ab.writes_applied.empty());
    CHECK(ov.get(k) == 7);

    // Expecting an abort is never a satisfied condition.
    run[3] = ab;
    Transaction on_abort = put_tx(4, k, 11);
    on_abort.condition = Condition{3, ab};
    CHECK(apply_transaction(on_abort, ov, run, nullptr).aborted);
    CHECK(ov.get(k) == 7);
  }

  TEST_CASE("naive sequential execution of the swap collapses both keys") {
    KvState base;
    base.put(Key{0, 0}, kApple);
    base.put(Key{1, 0}, kOrange);
    Overlay ov(base);
    OutcomeMap run;
    apply_transaction(swap_half(10, 11, Key{0, 0}, Key{1, 0}), ov, run, nullptr);
    apply_transaction(swap_half(11, 10, Key{1, 0}, Key{0, 0}), ov, run, nullptr);
    CHECK(ov.get(Key{0, 0}) == kOrange);
    CHECK(ov.get(Key{1, 0}) == kOrange);

    Overlay paired(base);
    apply_pair(swap_half(10, 11, Key{0, 0}, Key{1, 0}), swap_half(11, 10, Key{1, 0}, Key{0, 0}), paired);
    CHECK(paired.get(Key{0, 0}) == kOrange);
    CHECK(paired.get(Key{1, 0}) == kApple);
  }

  TEST_CASE("swap finalizes correctly in every leader placement") {
    // Case 1: both halves in round-4 blocks (same leader). Case 2: rounds 3 and 4 (same
    // leader). Case 3: round 4 and round 5, committed by consecutive leaders.
    const auto p = ProtocolParams::with_faults(1, 7);
    for (int which = 1; which <= 3; ++which) {
      DagBuilder d(p);
      const Round ra = which == 2 ? 3 : 4;
      const Round rb = which == 3 ? 5 : 4;
      // Keep both halves out of steady-leader blocks so the placement is what we intend.
      auto free_slot = [&](std::uint32_t s, Round r) {
        return r % 2 == 0 || author_in_charge(s, r, p) != d.sched.steady_leader(r);
      };
      std::optional<std::pair<std::uint32_t, std::uint32_t>> pick;
      for (std::uint32_t a = 0; a < p.n && !pick; ++a)
        for (std::uint32_t b = 0; b < p.n && !pick; ++b)
          if (a != b && free_slot(a, ra) && free_slot(b, rb)) pick = {a, b};
      REQUIRE(pick);
      const auto [sa, sb] = *pick;
      const Key ka{sa, 0}, kb{sb, 0};
      d.txs[BlockId{author_in_charge(sa, 1, p), 1}] = {put_tx(1, ka, kApple)};
      d.txs[BlockId{author_in_charge(sb, 1, p), 1}] = {put_tx(2, kb, kOrange)};
      const BlockId ba{author_in_charge(sa, ra, p), ra}, bb{author_in_charge(sb, rb, p), rb};
      d.txs[ba] = {swap_half(10, 11, ka, kb)};
      d.txs[bb] = {swap_half(11, 10, kb, ka)};

      std::vector<FinalizedBlock> ex;
      const auto ctx = commit_all(d, 14, &ex);
      CAPTURE(which);
      CHECK(ctx.state.get(ka) == kOrange);
      CHECK(ctx.state.get(kb) == kApple);
      CHECK(ctx.parked.empty());
      const bool same = leader_of(ex, ba) == leader_of(ex, bb);
      CHECK(same == (which != 3));
      REQUIRE(ctx.finals.count(10));
      REQUIRE(ctx.finals.count(11));
      CHECK(ctx.finals.at(10).reads_seen.front().second == kOrange);
      CHECK(ctx.finals.at(11).reads_seen.front().second == kApple);
    }
  }

  TEST_CASE("state version counts executed transactions once") {
    const auto p = ProtocolParams::with_faults(1, 2);
    DagBuilder d(p);
    TxId id = 100;
    for (Round r = 1; r <= 6; ++r)
      for (NodeId a = 0; a < p.n; ++a) d.txs[BlockId{a, r}] = {put_tx(id++, Key{shard_in_charge(a, r, p), 0}, r)};
    std::vector<FinalizedBlock> ex;
    const auto ctx = commit_all(d, 12, &ex);
    std::set<BlockId> seen;
    for (const auto& e : ex) CHECK(seen.insert(e.block).second);
    CHECK(ctx.finals.size() == ex.size() - std::count_if(ex.begin(), ex.end(), [&](const FinalizedBlock& e) {
                                 return d.store->block(d.store->find(e.block)).txs.empty();
                               }));
  }
}
