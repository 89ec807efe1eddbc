#pragma once

#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lemonshark/consensus.hpp"
#include "lemonshark/ordering_exec.hpp"
#include "lemonshark/rbc_net.hpp"

namespace lemonshark {

enum class FinalityMode : std::uint8_t { Lemonshark, Naive, BullsharkBaseline };
std::string to_string(FinalityMode m);
FinalityMode finality_mode_from_string(const std::string& s);

// Retry marks clauses whose inputs are not knowable yet (unseen block, unresolved query).
enum class Verdict : std::uint8_t { Pass, Fail, Retry };

struct LedgerEntry {
  std::optional<Round> sto_round;
  std::optional<Tick> sto_tick;
  std::optional<Outcome> sto_outcome;
  std::optional<Round> commit_round;
  std::optional<Tick> commit_tick;
  std::optional<Outcome> final_outcome;
  // Position in this ledger's decision sequence; orders decisions taken within one tick.
  std::optional<std::uint64_t> sto_seq;
  std::optional<std::uint64_t> commit_seq;
};

class FinalityLedger {
 public:
  const LedgerEntry* find(TxId id) const;
  bool has_sto(TxId id) const;
  bool is_final(TxId id) const;
  // STO outcomes are write-once.
  void award_sto(TxId id, Round round, Tick tick, const Outcome& o);
  void record_final(TxId id, Round round, Tick tick, const Outcome& o);
  bool sbo(BlockIndex b) const { return test_bit(sbo_bits_, b); }
  void mark_sbo(BlockIndex b, const BlockId& id, Round round);

  const std::map<TxId, LedgerEntry>& entries() const { return entries_; }
  std::map<TxId, LedgerEntry>& mutable_entries() { return entries_; }
  const std::vector<std::pair<BlockId, Round>>& sbo_blocks() const { return sbo_order_; }

  nlohmann::ordered_json to_json() const;
  static FinalityLedger from_json(const nlohmann::json& j);

 private:
  std::map<TxId, LedgerEntry> entries_;
  Bits sbo_bits_;
  std::vector<std::pair<BlockId, Round>> sbo_order_;
  std::uint64_t seq_ = 0;
};

enum class DelayReason : std::uint8_t { GammaAwaitPartner, SpeculativePending };

struct DelayEntry {
  TxId txid = 0;
  Round round = 0;
  BlockIndex block = kNoBlock;
  std::vector<Key> modified;
  DelayReason reason = DelayReason::GammaAwaitPartner;
};

class DelayList {
 public:
  void add(DelayEntry e);
  void remove(TxId id);
  bool contains(TxId id) const { return where_.count(id) != 0; }
  // Cumulative DL_r restricted to rounds >= from.
  std::vector<const DelayEntry*> upto(Round r, Round from = 1) const;
  std::size_t size() const { return where_.size(); }

 private:
  std::map<Round, std::vector<DelayEntry>> by_round_;
  std::unordered_map<TxId, Round> where_;
};

using MissingQuery = std::function<MissingStatus(const BlockId&)>;

// Read-only snapshot of one node's state handed to the checks.
struct NodeContext {
  const DagView& view;
  const LeaderSchedule& sched;
  const LeaderRecord& record;
  const CommitContext& commit;
  Round node_round = 0;
  Tick now = 0;
  MissingQuery query;
};

struct TxLocation {
  BlockIndex block = kNoBlock;
  std::size_t index = 0;
};

// Watermark of the next sorted history given the last committed leader.
Round watermark_for(const std::optional<BlockId>& last_leader, std::uint32_t v);

class FinalityEngine {
 public:
  FinalityEngine(ProtocolParams params, FinalityMode mode);

  FinalityMode mode() const { return mode_; }
  FinalityLedger& ledger() { return ledger_; }
  const FinalityLedger& ledger() const { return ledger_; }
  const DelayList& delay_list() const { return delay_; }
  std::optional<TxLocation> locate(TxId id) const;
  // Awards refused because a recomputed history disagreed with an earlier award.
  std::size_t run_inconsistencies() const { return inconsistencies_; }
  std::size_t awarded() const { return awarded_; }

  void on_block(const DagView& view, BlockIndex b);
  void on_final(const OutcomeMap& fresh, Round round, Tick tick);
  // Awards every STO/SBO that currently passes, to a fixpoint. Returns new STO count.
  std::size_t evaluate(const NodeContext& ctx);

  Verdict leader_check(const NodeContext& ctx, BlockIndex b, std::uint32_t shard);
  std::optional<std::vector<BlockId>> complete_shard_history(const NodeContext& ctx, BlockIndex b, std::uint32_t shard);
  Verdict alpha_sto_check(const NodeContext& ctx, BlockIndex b, std::size_t i);
  Verdict beta_sto_check(const NodeContext& ctx, BlockIndex b, std::size_t i);
  Verdict gamma_sto_check(const NodeContext& ctx, TxId t1, TxId t2);
  std::optional<MissingStatus> slot_status(const NodeContext& ctx, const BlockId& id);

 private:
  struct PairResult {
    Verdict verdict = Verdict::Fail;
    Outcome early;
    Outcome late;
  };

  bool committed(const NodeContext& ctx, BlockIndex b) const { return ctx.commit.is_committed(b); }
  bool present(const NodeContext& ctx, NodeId author, Round r, BlockIndex* out) const;
  bool slot_resolved(const NodeContext& ctx, Round r) const;
  Verdict settled(const NodeContext& ctx, std::uint32_t shard, Round from, Round to_excl);
  Verdict chain_clause(const NodeContext& ctx, BlockIndex root, std::uint32_t shard, Round r);
  Verdict watermark_safe(const NodeContext& ctx, const std::vector<BlockIndex>& roots, Round r) const;
  Verdict block_conditions(const NodeContext& ctx, BlockIndex b);
  bool dl_conflict(const NodeContext& ctx, const Transaction& t, Round r, TxId skip1, TxId skip2) const;
  bool earlier_unsafe(const Block& blk, std::size_t i) const;
  Verdict tx_clauses(const NodeContext& ctx, BlockIndex b, std::size_t i);
  Verdict beta_clauses(const NodeContext& ctx, BlockIndex b, const Transaction& t);
  Verdict condition_clause(const NodeContext& ctx, BlockIndex b, const Transaction& t) const;
  Verdict ordering_fixed(const NodeContext& ctx, BlockIndex be, BlockIndex bl);
  PairResult evaluate_pair(const NodeContext& ctx, TxLocation a, TxLocation b);
  bool consistent(const NodeContext& ctx, const OutcomeMap& run) const;
  bool eval_block(const NodeContext& ctx, BlockIndex b);
  void eval_naive(const NodeContext& ctx);
  void award(const NodeContext& ctx, const Outcome& o);

  ProtocolParams params_;
  FinalityMode mode_;
  FinalityLedger ledger_;
  DelayList delay_;
  std::unordered_map<TxId, TxLocation> where_;
  std::map<BlockId, MissingStatus> queried_;
  Bits naive_seen_;
  std::size_t inconsistencies_ = 0;
  std::size_t awarded_ = 0;
};

}  // namespace lemonshark
