#include <doctest.h>

#include <random>

#include "lemonshark/rng.hpp"
#include "support.hpp"

using namespace lstest;

TEST_SUITE("consensus") {
  TEST_CASE("steady leaders rotate fairly without immediate repeats") {
    for (std::uint32_t f : {1u, 2u, 3u}) {
      const auto p = ProtocolParams::with_faults(f, 42);
      LeaderSchedule s(p);
      std::vector<double> freq(p.n, 0);
      const int slots = 4000;
      NodeId prev = p.n;
      for (int k = 0; k < slots; ++k) {
        const NodeId l = s.steady_leader(2 * k + 1);
        CHECK(l < p.n);
        CHECK(l != prev);
        prev = l;
        freq[l] += 1.0 / slots;
      }
      for (double x : freq) CHECK(x == doctest::Approx(1.0 / p.n).epsilon(0.05 * p.n));
    }
  }

  TEST_CASE("even rounds have no steady slot") {
    LeaderSchedule s(ProtocolParams::with_faults(1));
    CHECK_THROWS_AS(s.steady_leader(2), ProtocolError);
    CHECK_THROWS_AS(s.steady_leader(0), ProtocolError);
  }

  TEST_CASE("fallback coin is a keyed hash of the wave") {
    const auto p = ProtocolParams::with_faults(2, 9);
    LeaderSchedule s(p);
    for (std::uint32_t w = 1; w < 50; ++w) CHECK(s.fallback_leader(w) == keyed(9, {0xc017ULL, w}) % p.n);
    LeaderSchedule again(p);
    CHECK(again.steady_leader(17) == s.steady_leader(17));
  }

  TEST_CASE("complete DAG commits every steady leader directly and in round order") {
    DagBuilder d(ProtocolParams::with_faults(1, 3));
    d.build(20);
    LeaderRecord rec;
    const auto fresh = try_commit(d.view, d.sched, rec, 20);
    REQUIRE(fresh.size() >= 8);
    for (std::size_t i = 0; i < rec.committed.size(); ++i) {
      CHECK(rec.committed[i].direct);
      CHECK(rec.committed[i].id.round == 2 * i + 1);
      CHECK(rec.committed[i].id.author == d.sched.steady_leader(2 * i + 1));
    }
    CHECK(try_commit(d.view, d.sched, rec, 20).empty());
  }

  TEST_CASE("a missing steady leader is skipped and later leaders still commit") {
    DagBuilder d(ProtocolParams::with_faults(1, 3));
    d.absent = {BlockId{d.sched.steady_leader(5), 5}};
    d.build(16);
    LeaderRecord rec;
    try_commit(d.view, d.sched, rec, 16);
    REQUIRE_FALSE(rec.committed.empty());
    for (const auto& c : rec.committed) CHECK(c.id.round != 5);
    CHECK(rec.committed.back().id.round >= 9);
  }

  TEST_CASE("views committing at different times agree on the leader prefix") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 15; ++trial) {
      const auto p = ProtocolParams::with_faults(1 + trial % 2, trial);
      auto store = std::make_shared<BlockStore>(p);
      DagView full(store, 0);
      LeaderSchedule sched(p);
      for (Round r = 1; r <= 16; ++r)
        for (NodeId a = 0; a < p.n; ++a) {
          Block b;
          b.id = {a, r};
          b.shard = shard_in_charge(a, r, p);
          if (r > 1) {
            auto prev = full.round_blocks(r - 1);
            std::shuffle(prev.begin(), prev.end(), rng);
            prev.resize(p.quorum() + rng() % (prev.size() - p.quorum() + 1));
            for (auto i : prev) b.parents.push_back(store->block(i).id);
          }
          full.insert_block(b);
        }
      LeaderRecord whole;
      try_commit(full, sched, whole, 16);

      // A second view fed round by round, committing as it goes.
      DagView step(store, 1);
      LeaderRecord inc;
      for (Round r = 1; r <= 16; ++r) {
        for (BlockIndex i : full.round_blocks(r)) step.insert_index(i);
        try_commit(step, sched, inc, r);
      }
      const auto m = std::min(whole.committed.size(), inc.committed.size());
      for (std::size_t i = 0; i < m; ++i) CHECK(whole.committed[i].id == inc.committed[i].id);
    }
  }
}
