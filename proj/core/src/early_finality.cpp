#include "lemonshark/early_finality.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace lemonshark {

namespace {

constexpr TxId kNoTx = std::numeric_limits<TxId>::max();

bool modifies_any(const Block& b, const std::set<Key>& keys) {
  for (const auto& t : b.txs)
    for (const auto& w : t.writes)
      if (keys.count(w)) return true;
  return false;
}

std::optional<Key> foreign_read(const Transaction& t) {
  const std::uint32_t own = t.writes.front().shard;
  for (const auto& k : t.reads)
    if (k.shard != own) return k;
  return std::nullopt;
}

nlohmann::ordered_json opt_u64(const std::optional<std::uint64_t>& v) {
  return v ? nlohmann::ordered_json(std::to_string(*v)) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string to_string(FinalityMode m) {
  switch (m) {
    case FinalityMode::Lemonshark: return "lemonshark";
    case FinalityMode::Naive: return "naive";
    case FinalityMode::BullsharkBaseline: return "bullshark";
  }
  return "?";
}

FinalityMode finality_mode_from_string(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "lemonshark") return FinalityMode::Lemonshark;
  if (l == "naive") return FinalityMode::Naive;
  if (l == "bullshark" || l == "bullsharkbaseline" || l == "baseline") return FinalityMode::BullsharkBaseline;
  throw ConfigError("unknown mode: " + s);
}

Round watermark_for(const std::optional<BlockId>& last_leader, std::uint32_t v) {
  if (!last_leader) return 1;
  return last_leader->round + 2 > v ? last_leader->round + 2 - v : 1;
}

// ---- ledger ----

const LedgerEntry* FinalityLedger::find(TxId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

bool FinalityLedger::has_sto(TxId id) const {
  auto* e = find(id);
  return e && e->sto_outcome.has_value();
}

bool FinalityLedger::is_final(TxId id) const {
  auto* e = find(id);
  return e && e->final_outcome.has_value();
}

void FinalityLedger::award_sto(TxId id, Round round, Tick tick, const Outcome& o) {
  auto& e = entries_[id];
  if (e.sto_outcome) {
    if (!(*e.sto_outcome == o)) throw ProtocolError("attempt to rewrite an STO outcome");
    return;
  }
  e.sto_round = round;
  e.sto_tick = tick;
  e.sto_outcome = o;
  e.sto_seq = seq_++;
}

void FinalityLedger::record_final(TxId id, Round round, Tick tick, const Outcome& o) {
  auto& e = entries_[id];
  if (e.final_outcome) {
    if (!(*e.final_outcome == o)) throw ProtocolError("attempt to rewrite a finalized outcome");
    return;
  }
  e.commit_round = round;
  e.commit_tick = tick;
  e.final_outcome = o;
  e.commit_seq = seq_++;
}

void FinalityLedger::mark_sbo(BlockIndex b, const BlockId& id, Round round) {
  if (sbo(b)) return;
  if (sbo_bits_.size() <= b) sbo_bits_.resize(std::max<std::size_t>(b + 1, sbo_bits_.size() * 2));
  sbo_bits_.set(b);
  sbo_order_.emplace_back(id, round);
}

nlohmann::ordered_json FinalityLedger::to_json() const {
  nlohmann::ordered_json j;
  auto txs = nlohmann::ordered_json::array();
  for (const auto& [id, e] : entries_) {
    nlohmann::ordered_json x;
    x["txid"] = std::to_string(id);
    x["sto_round"] = e.sto_round ? nlohmann::ordered_json(*e.sto_round) : nlohmann::ordered_json(nullptr);
    x["sto_tick"] = opt_u64(e.sto_tick);
    x["sto_outcome"] = e.sto_outcome ? lemonshark::to_json(*e.sto_outcome) : nlohmann::ordered_json(nullptr);
    x["commit_round"] = e.commit_round ? nlohmann::ordered_json(*e.commit_round) : nlohmann::ordered_json(nullptr);
    x["commit_tick"] = opt_u64(e.commit_tick);
    x["final_outcome"] = e.final_outcome ? lemonshark::to_json(*e.final_outcome) : nlohmann::ordered_json(nullptr);
    x["sto_seq"] = opt_u64(e.sto_seq);
    x["commit_seq"] = opt_u64(e.commit_seq);
    txs.push_back(std::move(x));
  }
  j["txs"] = std::move(txs);
  auto sbo = nlohmann::ordered_json::array();
  for (const auto& [b, r] : sbo_order_) {
    auto x = lemonshark::to_json(b);
    x["sbo_round"] = r;
    sbo.push_back(std::move(x));
  }
  j["sbo"] = std::move(sbo);
  return j;
}

FinalityLedger FinalityLedger::from_json(const nlohmann::json& j) {
  FinalityLedger l;
  for (const auto& x : j.at("txs")) {
    LedgerEntry e;
    if (!x.at("sto_round").is_null()) e.sto_round = x.at("sto_round").get<Round>();
    if (!x.at("sto_tick").is_null()) e.sto_tick = u64_from_json(x.at("sto_tick"));
    if (!x.at("sto_outcome").is_null()) e.sto_outcome = outcome_from_json(x.at("sto_outcome"));
    if (!x.at("commit_round").is_null()) e.commit_round = x.at("commit_round").get<Round>();
    if (!x.at("commit_tick").is_null()) e.commit_tick = u64_from_json(x.at("commit_tick"));
    if (!x.at("final_outcome").is_null()) e.final_outcome = outcome_from_json(x.at("final_outcome"));
    if (x.contains("sto_seq") && !x.at("sto_seq").is_null()) e.sto_seq = u64_from_json(x.at("sto_seq"));
    if (x.contains("commit_seq") && !x.at("commit_seq").is_null()) e.commit_seq = u64_from_json(x.at("commit_seq"));
    l.entries_[u64_from_json(x.at("txid"))] = std::move(e);
  }
  for (const auto& b : j.value("sbo", nlohmann::json::array()))
    l.sbo_order_.emplace_back(block_id_from_json(b), b.at("sbo_round").get<Round>());
  return l;
}

// ---- delay list ----

void DelayList::add(DelayEntry e) {
  if (where_.count(e.txid)) return;
  where_[e.txid] = e.round;
  by_round_[e.round].push_back(std::move(e));
}

void DelayList::remove(TxId id) {
  auto it = where_.find(id);
  if (it == where_.end()) return;
  auto& v = by_round_[it->second];
  v.erase(std::remove_if(v.begin(), v.end(), [&](const DelayEntry& e) { return e.txid == id; }), v.end());
  if (v.empty()) by_round_.erase(it->second);
  where_.erase(it);
}

std::vector<const DelayEntry*> DelayList::upto(Round r, Round from) const {
  std::vector<const DelayEntry*> out;
  for (auto it = by_round_.lower_bound(from); it != by_round_.end() && it->first <= r; ++it)
    for (const auto& e : it->second) out.push_back(&e);
  return out;
}

// ---- engine ----

FinalityEngine::FinalityEngine(ProtocolParams params, FinalityMode mode) : params_(params), mode_(mode) {}

std::optional<TxLocation> FinalityEngine::locate(TxId id) const {
  auto it = where_.find(id);
  if (it == where_.end()) return std::nullopt;
  return it->second;
}

void FinalityEngine::on_block(const DagView& view, BlockIndex b) {
  const Block& blk = view.store().block(b);
  for (std::size_t i = 0; i < blk.txs.size(); ++i) {
    const auto& t = blk.txs[i];
    where_[t.txid] = {b, i};
    if (ledger_.is_final(t.txid)) continue;
    if (t.kind == TxKind::GammaSub)
      delay_.add({t.txid, blk.id.round, b, t.writes, DelayReason::GammaAwaitPartner});
    else if (t.condition)
      delay_.add({t.txid, blk.id.round, b, t.writes, DelayReason::SpeculativePending});
  }
}

void FinalityEngine::on_final(const OutcomeMap& fresh, Round round, Tick tick) {
  // Deterministic order keeps ledger insertion independent of hash iteration.
  std::vector<TxId> ids;
  ids.reserve(fresh.size());
  for (const auto& kv : fresh) ids.push_back(kv.first);
  std::sort(ids.begin(), ids.end());
  for (TxId id : ids) {
    ledger_.record_final(id, round, tick, fresh.at(id));
    delay_.remove(id);
  }
}

bool FinalityEngine::present(const NodeContext& ctx, NodeId author, Round r, BlockIndex* out) const {
  const BlockIndex x = ctx.view.store().find(author, r);
  if (x == kNoBlock || !ctx.view.contains_index(x)) return false;
  *out = x;
  return true;
}

std::optional<MissingStatus> FinalityEngine::slot_status(const NodeContext& ctx, const BlockId& id) {
  if (auto it = queried_.find(id); it != queried_.end()) return it->second;
  if (id.round < 1 || id.round + 1 > ctx.node_round || !ctx.query) return std::nullopt;
  const MissingStatus s = ctx.query(id);
  queried_[id] = s;
  return s;
}

bool FinalityEngine::slot_resolved(const NodeContext& ctx, Round r) const {
  return !ctx.record.committed.empty() && ctx.record.committed.back().id.round >= r;
}

Verdict FinalityEngine::settled(const NodeContext& ctx, std::uint32_t shard, Round from, Round to_excl) {
  Verdict v = Verdict::Pass;
  for (Round r = std::max<Round>(from, 1); r < to_excl; ++r) {
    const NodeId a = author_in_charge(shard, r, params_);
    BlockIndex x;
    if (present(ctx, a, r, &x)) {
      if (!committed(ctx, x)) return Verdict::Fail;
      continue;
    }
    if (slot_status(ctx, {a, r}) != MissingStatus::DefinitelyMissing) v = Verdict::Retry;
  }
  return v;
}

Verdict FinalityEngine::chain_clause(const NodeContext& ctx, BlockIndex root, std::uint32_t shard, Round r) {
  const Verdict s = settled(ctx, shard, ctx.commit.watermark, r);
  if (s == Verdict::Pass) return s;
  if (r >= 2) {
    BlockIndex prev;
    if (present(ctx, author_in_charge(shard, r - 1, params_), r - 1, &prev) && ctx.view.store().reaches(root, prev) &&
        ledger_.sbo(prev))
      return Verdict::Pass;
  }
  return s;
}

Verdict FinalityEngine::watermark_safe(const NodeContext& ctx, const std::vector<BlockIndex>& roots, Round r) const {
  if (r + 3 <= params_.v) return Verdict::Pass;
  const Round limit = r + 3 - params_.v;
  const auto& store = ctx.view.store();
  for (Round rr = std::max<Round>(ctx.commit.watermark, 1); rr < limit; ++rr)
    for (NodeId a = 0; a < params_.n; ++a) {
      BlockIndex x;
      if (!present(ctx, a, rr, &x) || committed(ctx, x)) continue;
      for (BlockIndex root : roots)
        if (store.reaches(root, x)) return Verdict::Retry;
    }
  return Verdict::Pass;
}

Verdict FinalityEngine::leader_check(const NodeContext& ctx, BlockIndex b, std::uint32_t shard) {
  const auto& store = ctx.view.store();
  const Round r1 = store.block(b).id.round + 1;
  if (!LeaderSchedule::is_leader_round(r1)) return Verdict::Pass;
  if (committed(ctx, b) || slot_resolved(ctx, r1)) return Verdict::Pass;

  const auto census = voter_census(ctx.view, ctx.sched, wave_of(r1));
  const std::size_t weak = params_.weak_quorum();
  const bool steady_possible = census.steady + census.unknown >= weak;
  const bool fallback_possible = LeaderSchedule::is_wave_first_round(r1) && census.fallback + census.unknown >= weak;
  const NodeId target = author_in_charge(shard, r1, params_);

  auto needs_path = [&]() {
    BlockIndex x;
    if (present(ctx, target, r1, &x)) return store.reaches(x, b) ? Verdict::Pass : Verdict::Fail;
    return slot_status(ctx, {target, r1}) == MissingStatus::DefinitelyMissing ? Verdict::Pass : Verdict::Retry;
  };
  if (fallback_possible) {
    if (auto v = needs_path(); v != Verdict::Pass) return v;
  }
  if (steady_possible && ctx.sched.steady_leader(r1) == target) return needs_path();
  return Verdict::Pass;
}

std::optional<std::vector<BlockId>> FinalityEngine::complete_shard_history(const NodeContext& ctx, BlockIndex b,
                                                                          std::uint32_t shard) {
  const auto& store = ctx.view.store();
  const Block& blk = store.block(b);
  std::vector<BlockId> chain;
  if (blk.shard == shard) chain.push_back(blk.id);
  BlockIndex cur = b;
  Round r = blk.id.round;
  while (true) {
    const Verdict s = settled(ctx, shard, ctx.commit.watermark, r);
    if (s == Verdict::Pass) break;
    BlockIndex prev;
    if (r < 2 || !present(ctx, author_in_charge(shard, r - 1, params_), r - 1, &prev) || !store.reaches(cur, prev) ||
        committed(ctx, prev))
      return std::nullopt;
    chain.push_back(store.block(prev).id);
    cur = prev;
    --r;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

Verdict FinalityEngine::block_conditions(const NodeContext& ctx, BlockIndex b) {
  const Block& blk = ctx.view.store().block(b);
  const Round r = blk.id.round;
  if (!persists_index(ctx.view, b, r + 1)) return Verdict::Fail;
  if (auto v = leader_check(ctx, b, blk.shard); v != Verdict::Pass) return v;
  if (auto v = chain_clause(ctx, b, blk.shard, r); v != Verdict::Pass) return v;
  return watermark_safe(ctx, {b}, r);
}

bool FinalityEngine::dl_conflict(const NodeContext& ctx, const Transaction& t, Round r, TxId skip1, TxId skip2) const {
  for (const DelayEntry* e : delay_.upto(r, ctx.commit.watermark)) {
    if (e->txid == t.txid || e->txid == skip1 || e->txid == skip2) continue;
    if (e->reason == DelayReason::SpeculativePending && ledger_.has_sto(e->txid)) continue;
    for (const auto& k : e->modified)
      if (t.touches(k)) return true;
  }
  return false;
}

bool FinalityEngine::earlier_unsafe(const Block& blk, std::size_t i) const {
  const auto& t = blk.txs[i];
  for (std::size_t j = 0; j < i; ++j) {
    const auto& p = blk.txs[j];
    if (p.kind == TxKind::GammaSub || ledger_.has_sto(p.txid)) continue;
    for (const auto& k : t.reads)
      if (p.modifies(k)) return true;
  }
  return false;
}

Verdict FinalityEngine::beta_clauses(const NodeContext& ctx, BlockIndex b, const Transaction& t) {
  const auto& store = ctx.view.store();
  const auto a = foreign_read(t);
  if (!a) return Verdict::Fail;
  const std::uint32_t j = a->shard;
  const Round r = store.block(b).id.round;
  if (auto v = chain_clause(ctx, b, j, r); v != Verdict::Pass) return v;

  const NodeId same = author_in_charge(j, r, params_);
  BlockIndex x;
  if (present(ctx, same, r, &x)) {
    if (!committed(ctx, x) && store.block(x).modifies(*a)) return Verdict::Fail;
  } else if (slot_status(ctx, {same, r}) != MissingStatus::DefinitelyMissing) {
    return Verdict::Retry;
  }

  const Verdict lc = leader_check(ctx, b, j);
  if (lc == Verdict::Pass) return lc;
  const NodeId next = author_in_charge(j, r + 1, params_);
  if (present(ctx, next, r + 1, &x)) return store.block(x).modifies(*a) ? Verdict::Fail : Verdict::Pass;
  return slot_status(ctx, {next, r + 1}) == MissingStatus::DefinitelyMissing ? Verdict::Pass : Verdict::Retry;
}

Verdict FinalityEngine::condition_clause(const NodeContext& ctx, BlockIndex b, const Transaction& t) const {
  const TxId pred = t.condition->pred;
  if (ctx.commit.finals.count(pred)) return Verdict::Pass;
  if (ledger_.has_sto(pred)) {
    auto loc = locate(pred);
    if (loc && ctx.view.store().reaches(b, loc->block)) return Verdict::Pass;
  }
  return Verdict::Retry;
}

Verdict FinalityEngine::tx_clauses(const NodeContext& ctx, BlockIndex b, std::size_t i) {
  const Block& blk = ctx.view.store().block(b);
  const auto& t = blk.txs[i];
  if (dl_conflict(ctx, t, blk.id.round, kNoTx, kNoTx)) return Verdict::Fail;
  if (earlier_unsafe(blk, i)) return Verdict::Fail;
  if (t.kind == TxKind::Beta)
    if (auto v = beta_clauses(ctx, b, t); v != Verdict::Pass) return v;
  if (t.condition) return condition_clause(ctx, b, t);
  return Verdict::Pass;
}

Verdict FinalityEngine::alpha_sto_check(const NodeContext& ctx, BlockIndex b, std::size_t i) {
  const auto& t = ctx.view.store().block(b).txs.at(i);
  if (t.kind == TxKind::GammaSub) return Verdict::Fail;
  if (auto v = block_conditions(ctx, b); v != Verdict::Pass) return v;
  const Block& blk = ctx.view.store().block(b);
  if (dl_conflict(ctx, t, blk.id.round, kNoTx, kNoTx) || earlier_unsafe(blk, i)) return Verdict::Fail;
  return Verdict::Pass;
}

Verdict FinalityEngine::beta_sto_check(const NodeContext& ctx, BlockIndex b, std::size_t i) {
  const auto& t = ctx.view.store().block(b).txs.at(i);
  if (t.kind != TxKind::Beta) return Verdict::Fail;
  if (auto v = alpha_sto_check(ctx, b, i); v != Verdict::Pass) return v;
  return beta_clauses(ctx, b, t);
}

Verdict FinalityEngine::ordering_fixed(const NodeContext& ctx, BlockIndex be, BlockIndex bl) {
  const auto& store = ctx.view.store();
  if (store.reaches(bl, be)) return Verdict::Pass;
  const Round r = store.block(bl).id.round;
  const std::size_t weak = params_.weak_quorum();
  if (LeaderSchedule::is_leader_round(r) && !slot_resolved(ctx, r)) {
    const auto c = voter_census(ctx.view, ctx.sched, wave_of(r));
    if (c.steady + c.unknown >= weak && ctx.sched.steady_leader(r) == store.block(bl).id.author) return Verdict::Fail;
    if (LeaderSchedule::is_wave_first_round(r) && c.fallback + c.unknown >= weak) return Verdict::Fail;
  }
  const Round r1 = r + 1;
  if (!LeaderSchedule::is_leader_round(r1) || slot_resolved(ctx, r1)) return Verdict::Pass;
  const auto c = voter_census(ctx.view, ctx.sched, wave_of(r1));
  std::vector<NodeId> cands;
  if (LeaderSchedule::is_wave_first_round(r1) && c.fallback + c.unknown >= weak) {
    for (NodeId a = 0; a < params_.n; ++a) cands.push_back(a);
  } else if (c.steady + c.unknown >= weak) {
    cands.push_back(ctx.sched.steady_leader(r1));
  }
  Verdict v = Verdict::Pass;
  for (NodeId a : cands) {
    BlockIndex x;
    if (present(ctx, a, r1, &x)) {
      if (store.reaches(x, bl) && !store.reaches(x, be)) return Verdict::Fail;
    } else if (slot_status(ctx, {a, r1}) != MissingStatus::DefinitelyMissing) {
      v = Verdict::Retry;
    }
  }
  return v;
}

bool FinalityEngine::consistent(const NodeContext&, const OutcomeMap& run) const {
  for (const auto& [id, o] : run) {
    const auto* e = ledger_.find(id);
    if (e && e->sto_outcome && !(*e->sto_outcome == o)) return false;
  }
  return true;
}

FinalityEngine::PairResult FinalityEngine::evaluate_pair(const NodeContext& ctx, TxLocation a, TxLocation b) {
  PairResult res;
  const auto& store = ctx.view.store();
  const bool ca = committed(ctx, a.block), cb = committed(ctx, b.block);
  if (ca && cb) return res;
  TxLocation le = a, ll = b;
  if (cb || (!ca && store.block(a.block).id > store.block(b.block).id)) std::swap(le, ll);
  const Block& be = store.block(le.block);
  const Block& bl = store.block(ll.block);
  const Transaction& te = be.txs[le.index];
  const Transaction& tl = bl.txs[ll.index];
  const bool early_open = !committed(ctx, le.block);
  const Round r = bl.id.round;
  const std::uint32_t se = be.shard, sl = bl.shard;
  if (se == sl) return res;

  std::set<Key> keys;
  for (const auto* t : {&te, &tl}) {
    keys.insert(t->reads.begin(), t->reads.end());
    keys.insert(t->writes.begin(), t->writes.end());
  }
  for (const auto& k : keys)
    if (k.shard != se && k.shard != sl) return res;

  auto fail_with = [&](Verdict v) {
    res.verdict = v;
    return res;
  };
  if (auto v = block_conditions(ctx, ll.block); v != Verdict::Pass) return fail_with(v);
  for (std::size_t j = 0; j < ll.index; ++j)
    if (bl.txs[j].kind != TxKind::GammaSub && !ledger_.has_sto(bl.txs[j].txid)) return fail_with(Verdict::Retry);
  if (early_open) {
    if (!persists_index(ctx.view, le.block, r + 1)) return fail_with(Verdict::Fail);
    if (auto v = ordering_fixed(ctx, le.block, ll.block); v != Verdict::Pass) return fail_with(v);
    for (const auto& t : be.txs)
      if (t.kind != TxKind::GammaSub && !ledger_.has_sto(t.txid)) return fail_with(Verdict::Retry);
  }
  if (dl_conflict(ctx, te, r, te.txid, tl.txid) || dl_conflict(ctx, tl, r, te.txid, tl.txid)) return fail_with(Verdict::Fail);

  // Writers of the early shard that could land before the pair's execution point.
  for (Round rr = std::max<Round>(ctx.commit.watermark, 1); rr <= r; ++rr) {
    const NodeId au = author_in_charge(se, rr, params_);
    BlockIndex x;
    if (present(ctx, au, rr, &x)) {
      if (x == le.block || committed(ctx, x)) continue;
      if (store.reaches(ll.block, x) && ledger_.sbo(x)) continue;
      if (modifies_any(store.block(x), keys)) return fail_with(Verdict::Fail);
    } else if (slot_status(ctx, {au, rr}) != MissingStatus::DefinitelyMissing) {
      return fail_with(Verdict::Retry);
    }
  }
  if (leader_check(ctx, ll.block, se) != Verdict::Pass) {
    const NodeId au = author_in_charge(se, r + 1, params_);
    BlockIndex x;
    if (present(ctx, au, r + 1, &x)) {
      if (modifies_any(store.block(x), keys)) return fail_with(Verdict::Fail);
    } else if (slot_status(ctx, {au, r + 1}) != MissingStatus::DefinitelyMissing) {
      return fail_with(Verdict::Retry);
    }
  }
  std::vector<BlockIndex> roots{ll.block};
  if (early_open) roots.push_back(le.block);
  if (auto v = watermark_safe(ctx, roots, r); v != Verdict::Pass) return fail_with(v);

  const auto order = sorted_union(ctx.view, ctx.commit, roots);
  const auto run = run_sequence(ctx.view, ctx.commit, order, ExecStop{ll.block, ll.index});
  if (!consistent(ctx, run)) {
    ++inconsistencies_;
    return fail_with(Verdict::Fail);
  }
  auto ie = run.find(te.txid), il = run.find(tl.txid);
  if (ie == run.end() || il == run.end()) return fail_with(Verdict::Retry);
  res.verdict = Verdict::Pass;
  res.early = ie->second;
  res.late = il->second;
  return res;
}

Verdict FinalityEngine::gamma_sto_check(const NodeContext& ctx, TxId t1, TxId t2) {
  auto a = locate(t1), b = locate(t2);
  if (!a || !b || !ctx.view.contains_index(a->block) || !ctx.view.contains_index(b->block)) return Verdict::Retry;
  const auto& x = ctx.view.store().block(a->block).txs[a->index];
  if (x.kind != TxKind::GammaSub || x.partner != t2) return Verdict::Fail;
  return evaluate_pair(ctx, *a, *b).verdict;
}

void FinalityEngine::award(const NodeContext& ctx, const Outcome& o) {
  if (ledger_.has_sto(o.txid)) return;
  ledger_.award_sto(o.txid, ctx.node_round, ctx.now, o);
  ++awarded_;
}

bool FinalityEngine::eval_block(const NodeContext& ctx, BlockIndex b) {
  const auto& store = ctx.view.store();
  const Block& blk = store.block(b);
  if (block_conditions(ctx, b) != Verdict::Pass) return false;
  bool changed = false;
  std::optional<OutcomeMap> run;
  for (std::size_t i = 0; i < blk.txs.size(); ++i) {
    const auto& t = blk.txs[i];
    if (ledger_.has_sto(t.txid)) continue;
    if (t.kind == TxKind::GammaSub) {
      auto pl = locate(*t.partner);
      if (!pl || !ctx.view.contains_index(pl->block)) continue;
      // A pair is evaluated from the block at which it will execute.
      const bool pc = committed(ctx, pl->block);
      const bool later = pc || (store.block(pl->block).id < blk.id);
      if (!later) continue;
      auto pr = evaluate_pair(ctx, {b, i}, *pl);
      if (pr.verdict != Verdict::Pass) continue;
      award(ctx, pr.early);
      award(ctx, pr.late);
      changed = true;
      continue;
    }
    if (tx_clauses(ctx, b, i) != Verdict::Pass) continue;
    if (!run) {
      run = run_sequence(ctx.view, ctx.commit, sorted_history(ctx.view, blk.id, ctx.commit).order);
      if (!consistent(ctx, *run)) {
        ++inconsistencies_;
        return changed;
      }
    }
    auto it = run->find(t.txid);
    if (it == run->end()) continue;
    award(ctx, it->second);
    changed = true;
  }
  if (std::all_of(blk.txs.begin(), blk.txs.end(), [&](const Transaction& t) { return ledger_.has_sto(t.txid); })) {
    ledger_.mark_sbo(b, blk.id, ctx.node_round);
    changed = true;
  }
  return changed;
}

void FinalityEngine::eval_naive(const NodeContext& ctx) {
  const auto& store = ctx.view.store();
  for (BlockIndex b : ctx.view.delivered_order()) {
    if (test_bit(naive_seen_, b) || committed(ctx, b)) continue;
    if (naive_seen_.size() <= b) naive_seen_.resize(std::max<std::size_t>(b + 1, naive_seen_.size() * 2));
    naive_seen_.set(b);
    const Block& blk = store.block(b);
    if (blk.txs.empty()) continue;
    const auto run = run_sequence(ctx.view, ctx.commit, sorted_history(ctx.view, blk.id, ctx.commit).order);
    bool all = true;
    for (const auto& t : blk.txs) {
      auto it = run.find(t.txid);
      if (it == run.end()) {
        all = false;
        continue;
      }
      if (!ledger_.has_sto(t.txid)) award(ctx, it->second);
    }
    if (all) ledger_.mark_sbo(b, blk.id, ctx.node_round);
  }
}

std::size_t FinalityEngine::evaluate(const NodeContext& ctx) {
  if (mode_ == FinalityMode::BullsharkBaseline) return 0;
  const std::size_t start = awarded_;
  if (mode_ == FinalityMode::Naive) {
    eval_naive(ctx);
    return awarded_ - start;
  }
  const Round top = ctx.view.max_round();
  bool changed = true;
  while (changed) {
    changed = false;
    for (Round r = std::max<Round>(ctx.commit.watermark, 1); r < top; ++r)
      for (NodeId a = 0; a < params_.n; ++a) {
        BlockIndex b;
        if (!present(ctx, a, r, &b) || committed(ctx, b) || ledger_.sbo(b)) continue;
        changed |= eval_block(ctx, b);
      }
  }
  return awarded_ - start;
}

}  // namespace lemonshark
