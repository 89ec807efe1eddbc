#include <doctest.h>

#include "lemonshark/speculation.hpp"
#include "support.hpp"

using namespace lstest;

namespace {

TxChain make_chain(std::uint32_t len) {
  TxChain c;
  c.spec.client = 3;
  c.spec.length = len;
  c.txs.resize(len);
  for (std::uint32_t i = 0; i < len; ++i) {
    auto& e = c.txs[i];
    e.tx = put_tx(chain_txid(3, i), Key{0, 2003}, i + 1);
    e.status = ChainStatus::SpeculativelySent;
    if (i > 0) {
      Outcome exp;
      exp.txid = chain_txid(3, i - 1);
      exp.writes_applied = {{Key{0, 2003}, Value(i)}};
      e.tx.condition = Condition{exp.txid, exp};
    }
  }
  return c;
}

Outcome outcome_of(const Transaction& t, Value written) {
  Outcome o;
  o.txid = t.txid;
  o.writes_applied = {{t.writes.front(), written}};
  return o;
}

}  // namespace

TEST_SUITE("speculation") {
  TEST_CASE("chain ids and keys") {
    CHECK(chain_txid(1, 2) == ((1ULL << 63) | (1ULL << 32) | 2));
    ChainSpec s;
    s.client = 4;
    s.shard = 2;
    CHECK(chain_key(s) == Key{2, 2004});
  }

  TEST_CASE("single-element chain confirms at its own finality") {
    auto c = make_chain(1);
    FinalityLedger l;
    CHECK_FALSE(resolve_chain(l, c, 3));
    l.record_final(c.txs[0].tx.txid, 5, 10, outcome_of(c.txs[0].tx, 1));
    CHECK(resolve_chain(l, c, 5));
    CHECK(c.txs[0].status == ChainStatus::Confirmed);
    REQUIRE(c.completed_round);
    CHECK(*c.completed_round == 5);
  }

  TEST_CASE("correct speculation confirms the whole chain, STO counts as known") {
    auto c = make_chain(3);
    FinalityLedger l;
    l.award_sto(c.txs[0].tx.txid, 3, 1, outcome_of(c.txs[0].tx, 1));
    l.award_sto(c.txs[1].tx.txid, 3, 1, outcome_of(c.txs[1].tx, 2));
    l.record_final(c.txs[2].tx.txid, 4, 2, outcome_of(c.txs[2].tx, 3));
    CHECK(resolve_chain(l, c, 4));
    for (const auto& e : c.txs) CHECK(e.status == ChainStatus::Confirmed);
    CHECK(c.aborts == 0);
  }

  TEST_CASE("a predecessor mismatch aborts the tail before its commit") {
    auto c = make_chain(3);
    FinalityLedger l;
    l.award_sto(c.txs[0].tx.txid, 3, 1, outcome_of(c.txs[0].tx, 42));
    CHECK(resolve_chain(l, c, 3));
    CHECK(c.txs[0].status == ChainStatus::Confirmed);
    CHECK(c.txs[1].status == ChainStatus::Pending);
    CHECK(c.txs[2].status == ChainStatus::Pending);
    CHECK(c.aborts == 1);
    CHECK(c.retired.size() == 2);
    CHECK_FALSE(c.completed_round);
  }

  TEST_CASE("an aborted outcome resets the element and its successors") {
    auto c = make_chain(3);
    FinalityLedger l;
    l.record_final(c.txs[0].tx.txid, 3, 1, outcome_of(c.txs[0].tx, 1));
    Outcome ab;
    ab.txid = c.txs[1].tx.txid;
    ab.aborted = true;
    l.record_final(ab.txid, 4, 2, ab);
    CHECK(resolve_chain(l, c, 4));
    CHECK(c.txs[0].status == ChainStatus::Confirmed);
    CHECK(c.txs[1].status == ChainStatus::Pending);
    CHECK(c.txs[2].status == ChainStatus::Pending);
  }

  TEST_CASE("known outcome prefers the final value") {
    FinalityLedger l;
    Outcome a;
    a.txid = 7;
    a.writes_applied = {{Key{0, 0}, 1}};
    l.award_sto(7, 1, 1, a);
    CHECK(known_outcome(l, 7) == a);
    Outcome b = a;
    b.writes_applied[0].second = 2;
    l.record_final(7, 2, 2, b);
    CHECK(known_outcome(l, 7) == b);
    CHECK_FALSE(known_outcome(l, 8));
  }
}

TEST_SUITE("early-finality") {
  TEST_CASE("STO outcomes are write-once") {
    FinalityLedger l;
    Outcome o;
    o.txid = 1;
    l.award_sto(1, 2, 5, o);
    CHECK_NOTHROW(l.award_sto(1, 3, 6, o));
    CHECK(*l.find(1)->sto_round == 2);
    Outcome other = o;
    other.aborted = true;
    CHECK_THROWS_AS(l.award_sto(1, 3, 6, other), ProtocolError);
  }

  TEST_CASE("decision sequence orders STO before a same-tick commit") {
    FinalityLedger l;
    Outcome o;
    o.txid = 4;
    l.award_sto(4, 6, 9, o);
    l.record_final(4, 6, 9, o);
    const auto* e = l.find(4);
    REQUIRE(e);
    CHECK(*e->sto_seq < *e->commit_seq);
  }

  TEST_CASE("ledger JSON round trip") {
    FinalityLedger l;
    Outcome o;
    o.txid = (1ULL << 63) | 5;
    o.writes_applied = {{Key{1, 2}, -3}};
    o.reads_seen = {{Key{0, 1}, 4}};
    l.award_sto(o.txid, 2, 3, o);
    l.record_final(o.txid, 3, 7, o);
    l.mark_sbo(0, BlockId{1, 2}, 3);
    const auto back = FinalityLedger::from_json(nlohmann::json::parse(l.to_json().dump()));
    CHECK(back.to_json() == l.to_json());
    REQUIRE(back.sbo_blocks().size() == 1);
    CHECK(back.sbo_blocks()[0] == std::pair<BlockId, Round>{BlockId{1, 2}, 3});
  }

  TEST_CASE("delay list tracks entries per round") {
    DelayList dl;
    dl.add(DelayEntry{1, 3, 0, {Key{0, 0}}, DelayReason::GammaAwaitPartner});
    dl.add(DelayEntry{2, 5, 1, {Key{1, 0}}, DelayReason::SpeculativePending});
    CHECK(dl.size() == 2);
    CHECK(dl.upto(4).size() == 1);
    CHECK(dl.upto(5).size() == 2);
    CHECK(dl.upto(5, 4).size() == 1);
    dl.remove(1);
    CHECK_FALSE(dl.contains(1));
    CHECK(dl.upto(5).size() == 1);
  }

  TEST_CASE("complete synchronous DAG: every non-leader alpha block gets SBO before commit") {
    const auto p = ProtocolParams::with_faults(1, 4);
    DagBuilder d(p);
    TxId id = 1;
    for (Round r = 1; r <= 10; ++r)
      for (NodeId a = 0; a < p.n; ++a) d.txs[BlockId{a, r}] = {put_tx(id++, Key{shard_in_charge(a, r, p), 0}, r)};
    FinalityEngine eng(p, FinalityMode::Lemonshark);
    LeaderRecord rec;
    CommitContext ctx;
    for (Round r = 1; r <= 10; ++r) {
      d.build(r);
      for (BlockIndex b : d.view.round_blocks(r)) eng.on_block(d.view, b);
      auto fresh = try_commit(d.view, d.sched, rec, r);
      if (!fresh.empty()) {
        auto outs = finalize_committed(ctx, d.view, fresh, p.v);
        d.view.last_committed_leader = rec.last();
        eng.on_final(outs, r, r);
      }
      NodeContext nc{d.view, d.sched, rec, ctx, r, r, [](const BlockId&) { return MissingStatus::PossiblyExists; }};
      eng.evaluate(nc);
    }
    for (Round r = 2; r <= 7; ++r)
      for (NodeId a = 0; a < p.n; ++a) {
        if (r % 2 == 1 && a == d.sched.steady_leader(r)) continue;
        const auto* e = eng.ledger().find(d.store->block(d.store->find(a, r)).txs[0].txid);
        CAPTURE(r);
        CAPTURE(a);
        REQUIRE(e);
        REQUIRE(e->sto_round);
        CHECK(*e->sto_round == r + 1);
        if (e->final_outcome) CHECK(*e->final_outcome == *e->sto_outcome);
      }
  }
}

TEST_SUITE("rbc-net") {
  TEST_CASE("synchronous policy delivers everywhere on the next tick") {
    const auto p = ProtocolParams::with_faults(1);
    Network net(p, AdversarySchedule{});
    DagBuilder d(p);
    const auto ev = net.rbc_broadcast(2, d.make(2, 1), 10);
    CHECK(ev.size() == p.n);
    for (const auto& e : ev) CHECK(e.tick == (e.dst == 2 ? 10u : 11u));
    CHECK(net.issued(BlockId{2, 1}));
  }

  TEST_CASE("crashed senders broadcast nothing and are never delivered to") {
    const auto p = ProtocolParams::with_faults(1);
    AdversarySchedule s;
    s.crashed = {3};
    Network net(p, s);
    DagBuilder d(p);
    CHECK(net.rbc_broadcast(3, d.make(3, 1), 0).empty());
    const auto ev = net.rbc_broadcast(0, d.make(0, 1), 0);
    CHECK(ev.size() == 3);
    for (const auto& e : ev) CHECK(e.dst != 3);
  }

  TEST_CASE("a definitely-missing verdict is binding") {
    const auto p = ProtocolParams::with_faults(1);
    Network net(p, AdversarySchedule{});
    CHECK(net.query_missing(0, BlockId{1, 4}, 5) == MissingStatus::DefinitelyMissing);
    CHECK(net.suppressed(BlockId{1, 4}));
    DagBuilder d(p);
    d.build(3);
    CHECK(net.rbc_broadcast(1, d.make(1, 4), 6).empty());
    net.rbc_broadcast(2, d.make(2, 4), 6);
    CHECK(net.query_missing(0, BlockId{2, 4}, 6) == MissingStatus::PossiblyExists);
  }

  TEST_CASE("events leave the queue in tick then sequence order") {
    const auto p = ProtocolParams::with_faults(1);
    AdversarySchedule s;
    s.policy = RandomDelayPolicy{6};
    s.seed = 3;
    Network net(p, s);
    DagBuilder d(p);
    for (NodeId a = 0; a < p.n; ++a) net.rbc_broadcast(a, d.make(a, 1), 0);
    Tick last = 0;
    std::uint64_t last_seq = 0;
    while (!net.idle()) {
      const Tick t = net.next_tick();
      CHECK(t >= last);
      for (const auto& e : net.pop_due(t)) {
        if (t == last) CHECK(e.seq > last_seq);
        last_seq = e.seq;
      }
      last = t;
    }
  }

  TEST_CASE("crash choice is seeded and sized") {
    const auto a = choose_crashed(10, 3, 8);
    CHECK(a.size() == 3);
    CHECK(a == choose_crashed(10, 3, 8));
    CHECK(std::set<NodeId>(a.begin(), a.end()).size() == 3);
  }
}
