#include "lemonshark/ordering_exec.hpp"

#include <algorithm>

namespace lemonshark {

Value KvState::get(const Key& k) const {
  auto it = store_.find(k);
  return it == store_.end() ? 0 : it->second;
}

nlohmann::ordered_json KvState::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = std::to_string(version);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [k, v] : store_) {
    nlohmann::ordered_json e;
    e["shard"] = k.shard;
    e["key"] = k.key;
    e["value"] = std::to_string(v);
    arr.push_back(std::move(e));
  }
  j["entries"] = std::move(arr);
  return j;
}

KvState KvState::from_json(const nlohmann::json& j) {
  KvState s;
  s.version = u64_from_json(j.at("version"));
  for (const auto& e : j.at("entries")) s.put(key_from_json(e), i64_from_json(e.at("value")));
  return s;
}

Value Overlay::get(const Key& k) const {
  auto it = writes_.find(k);
  return it == writes_.end() ? base_->get(k) : it->second;
}

void Overlay::apply_to(KvState& target) const {
  for (const auto& [k, v] : writes_) target.put(k, v);
  target.version += applied;
}

namespace {

std::vector<BlockIndex> collect(const BlockStore& store, const Bits& reach, const Bits* committed, Round from, Round to) {
  std::vector<BlockIndex> out;
  const auto n = store.params().n;
  for (Round r = std::max<Round>(from, 1); r <= to; ++r)
    for (NodeId a = 0; a < n; ++a) {
      const BlockIndex x = store.find(a, r);
      if (x == kNoBlock || !test_bit(reach, x)) continue;
      if (committed && test_bit(*committed, x)) continue;
      out.push_back(x);
    }
  return out;
}

Outcome compute(const Transaction& t, const std::vector<std::pair<Key, Value>>& reads) {
  Outcome o;
  o.txid = t.txid;
  o.reads_seen = reads;
  std::uint64_t sum = 0;
  for (const auto& kv : reads) sum += static_cast<std::uint64_t>(kv.second);
  Value v = 0;
  switch (t.body.op) {
    case Body::Op::Put: v = t.body.arg; break;
    case Body::Op::CopyReadToWrite: v = static_cast<Value>(sum); break;
    case Body::Op::AddReadToWrite: v = static_cast<Value>(sum + static_cast<std::uint64_t>(t.body.arg)); break;
  }
  for (const auto& k : t.writes) o.writes_applied.emplace_back(k, v);
  return o;
}

std::vector<std::pair<Key, Value>> read_all(const Transaction& t, const Overlay& state) {
  std::vector<std::pair<Key, Value>> r;
  r.reserve(t.reads.size());
  for (const auto& k : t.reads) r.emplace_back(k, state.get(k));
  return r;
}

void write_all(const Outcome& o, Overlay& state) {
  for (const auto& [k, v] : o.writes_applied) state.put(k, v);
  ++state.applied;
}

}  // namespace

SortedHistory sorted_history(const DagView& view, const BlockId& root, const Bits* committed, std::optional<Round> watermark,
                             std::optional<BlockId> excluded_before) {
  const BlockIndex ri = view.index_of(root);
  SortedHistory h;
  h.root = root;
  h.watermark = watermark;
  h.excluded_before = excluded_before;
  h.order = collect(view.store(), view.store().ancestors(ri), committed, watermark.value_or(1), root.round);
  return h;
}

SortedHistory sorted_history(const DagView& view, const BlockId& root, const CommitContext& ctx) {
  return sorted_history(view, root, &ctx.committed, ctx.watermark, ctx.last_leader);
}

std::vector<BlockIndex> sorted_union(const DagView& view, const CommitContext& ctx, const std::vector<BlockIndex>& roots) {
  const auto& store = view.store();
  Bits reach(store.size());
  Round top = 0;
  for (BlockIndex r : roots) {
    Bits a = store.ancestors(r);
    a.resize(store.size());
    reach |= a;
    top = std::max(top, store.block(r).id.round);
  }
  return collect(store, reach, &ctx.committed, ctx.watermark, top);
}

Outcome apply_transaction(const Transaction& t, Overlay& state, const OutcomeMap& run, const OutcomeMap* prior) {
  if (t.condition) {
    const Outcome* pred = nullptr;
    if (auto it = run.find(t.condition->pred); it != run.end()) pred = &it->second;
    else if (prior)
      if (auto jt = prior->find(t.condition->pred); jt != prior->end()) pred = &jt->second;
    if (!pred || pred->aborted || !(*pred == t.condition->expected)) {
      Outcome o;
      o.txid = t.txid;
      o.aborted = true;
      return o;
    }
  }
  Outcome o = compute(t, read_all(t, state));
  write_all(o, state);
  return o;
}

std::pair<Outcome, Outcome> apply_pair(const Transaction& a, const Transaction& b, Overlay& state) {
  Outcome oa = compute(a, read_all(a, state));
  Outcome ob = compute(b, read_all(b, state));
  write_all(oa, state);
  write_all(ob, state);
  return {std::move(oa), std::move(ob)};
}

ExecOutput execute_blocks(const BlockStore& store, const std::vector<BlockIndex>& order, Overlay& state, ParkedSet& parked,
                          const OutcomeMap* prior, std::optional<ExecStop> stop) {
  struct Slot {
    const Transaction* tx;
    BlockIndex block;
  };
  std::vector<Slot> seq;
  for (BlockIndex b : order) {
    const auto& txs = store.block(b).txs;
    std::size_t end = txs.size();
    if (stop && stop->block == b) end = std::min(end, stop->tx_index + 1);
    for (std::size_t i = 0; i < end; ++i) seq.push_back({&txs[i], b});
    if (stop && stop->block == b) break;
  }

  std::unordered_map<TxId, std::size_t> gamma_pos;
  for (std::size_t p = 0; p < seq.size(); ++p)
    if (seq[p].tx->kind == TxKind::GammaSub) gamma_pos[seq[p].tx->txid] = p;

  ExecOutput out;
  std::unordered_map<TxId, const Transaction*> deferred;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    const Transaction& t = *seq[p].tx;
    if (t.kind != TxKind::GammaSub) {
      out.outcomes[t.txid] = apply_transaction(t, state, out.outcomes, prior);
      continue;
    }
    const TxId q = *t.partner;
    const Transaction* other = nullptr;
    if (auto it = parked.find(q); it != parked.end()) {
      auto [oa, ob] = apply_pair(it->second.tx, t, state);
      out.outcomes[oa.txid] = std::move(oa);
      out.outcomes[ob.txid] = std::move(ob);
      parked.erase(it);
      continue;
    }
    if (auto it = deferred.find(q); it != deferred.end()) other = it->second;
    if (other) {
      auto [oa, ob] = apply_pair(*other, t, state);
      out.outcomes[oa.txid] = std::move(oa);
      out.outcomes[ob.txid] = std::move(ob);
      deferred.erase(q);
    } else if (auto it = gamma_pos.find(q); it != gamma_pos.end() && it->second > p) {
      deferred[t.txid] = &t;
    } else {
      parked[t.txid] = ParkedTx{t, store.block(seq[p].block).id};
      out.newly_parked.push_back(t.txid);
    }
  }
  return out;
}

std::pair<KvState, OutcomeMap> execute_history(const KvState& state, const DagView& view, const SortedHistory& hist,
                                               ParkedSet& parked, const OutcomeMap* prior) {
  Overlay ov(state);
  auto out = execute_blocks(view.store(), hist.order, ov, parked, prior);
  KvState next = state;
  ov.apply_to(next);
  return {std::move(next), std::move(out.outcomes)};
}

OutcomeMap run_sequence(const DagView& view, const CommitContext& ctx, const std::vector<BlockIndex>& order,
                        std::optional<ExecStop> stop) {
  Overlay ov(ctx.state);
  ParkedSet parked = ctx.parked;
  return execute_blocks(view.store(), order, ov, parked, &ctx.finals, stop).outcomes;
}

std::optional<Outcome> transaction_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b, std::size_t i) {
  const BlockIndex bi = view.index_of(b);
  if (i >= view.store().block(bi).txs.size()) throw ProtocolError("transaction index out of range");
  const auto hist = sorted_history(view, b, ctx);
  auto outs = run_sequence(view, ctx, hist.order, ExecStop{bi, i});
  const TxId id = view.store().block(bi).txs[i].txid;
  if (auto it = outs.find(id); it != outs.end()) return it->second;
  return std::nullopt;
}

OutcomeMap block_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b) {
  const BlockIndex bi = view.index_of(b);
  const auto& blk = view.store().block(bi);
  OutcomeMap res;
  if (blk.txs.empty()) return res;
  const auto hist = sorted_history(view, b, ctx);
  auto outs = run_sequence(view, ctx, hist.order);
  for (const auto& t : blk.txs)
    if (auto it = outs.find(t.txid); it != outs.end()) res.emplace(t.txid, it->second);
  return res;
}

OutcomeMap finalize_committed(CommitContext& ctx, const DagView& view, const std::vector<BlockId>& new_leaders,
                              std::uint32_t look_back, std::vector<FinalizedBlock>* executed) {
  OutcomeMap fresh;
  const auto& store = view.store();
  for (const auto& leader : new_leaders) {
    const auto hist = sorted_history(view, leader, ctx);
    Overlay ov(ctx.state);
    auto out = execute_blocks(store, hist.order, ov, ctx.parked, &ctx.finals);
    ov.apply_to(ctx.state);
    if (ctx.committed.size() < store.size()) ctx.committed.resize(store.size());
    for (BlockIndex b : hist.order) {
      ctx.committed.set(b);
      if (executed) executed->push_back({store.block(b).id, leader});
    }
    for (auto& [id, o] : out.outcomes) {
      ctx.finals[id] = o;
      fresh[id] = std::move(o);
    }
    ctx.last_leader = leader;
    ctx.watermark = leader.round + 2 > look_back ? leader.round + 2 - look_back : 1;
  }
  return fresh;
}

}  // namespace lemonshark
