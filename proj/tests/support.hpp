#pragma once

#include <map>
#include <memory>
#include <set>

#include "lemonshark/consensus.hpp"
#include "lemonshark/ordering_exec.hpp"

namespace lstest {

using namespace lemonshark;

// Hand-built DAG: every present block points at every present block of the round below.
struct DagBuilder {
  ProtocolParams params;
  std::shared_ptr<BlockStore> store;
  DagView view;
  LeaderSchedule sched;
  std::map<BlockId, std::vector<Transaction>> txs;
  std::set<BlockId> absent;

  explicit DagBuilder(ProtocolParams p)
      : params(p), store(std::make_shared<BlockStore>(p)), view(store, 0), sched(p) {}

  Block make(NodeId a, Round r) const {
    Block b;
    b.id = BlockId{a, r};
    b.shard = shard_in_charge(a, r, params);
    if (r > 1)
      for (BlockIndex i : view.round_blocks(r - 1)) b.parents.push_back(store->block(i).id);
    if (auto it = txs.find(b.id); it != txs.end()) b.txs = it->second;
    return b;
  }

  void build(Round upto) {
    for (Round r = view.max_round() + 1; r <= upto; ++r)
      for (NodeId a = 0; a < params.n; ++a)
        if (!absent.count(BlockId{a, r})) view.insert_block(make(a, r));
  }
};

inline Transaction put_tx(TxId id, Key k, Value v) {
  Transaction t;
  t.txid = id;
  t.reads.push_back(k);
  t.writes.push_back(k);
  t.body = Body::put(v);
  return t;
}

// One half of a swap: copies `from` into `to`.
inline Transaction swap_half(TxId id, TxId partner, Key to, Key from) {
  Transaction t;
  t.txid = id;
  t.kind = TxKind::GammaSub;
  t.partner = partner;
  t.reads.push_back(from);
  t.writes.push_back(to);
  t.body = Body::copy();
  return t;
}

}  // namespace lstest
