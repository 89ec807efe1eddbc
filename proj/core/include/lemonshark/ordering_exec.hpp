#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lemonshark/dag.hpp"

namespace lemonshark {

class KvState {
 public:
  Value get(const Key& k) const;
  void put(const Key& k, Value v) { store_[k] = v; }
  const std::map<Key, Value>& entries() const { return store_; }
  std::uint64_t version = 0;

  nlohmann::ordered_json to_json() const;
  static KvState from_json(const nlohmann::json& j);
  friend bool operator==(const KvState&, const KvState&) = default;

 private:
  std::map<Key, Value> store_;
};

// Write buffer layered over a base state; lets a node evaluate outcomes without
// copying its finalized store.
class Overlay {
 public:
  explicit Overlay(const KvState& base) : base_(&base) {}
  Value get(const Key& k) const;
  void put(const Key& k, Value v) { writes_[k] = v; }
  void apply_to(KvState& target) const;
  std::uint64_t applied = 0;

 private:
  const KvState* base_;
  std::unordered_map<Key, Value> writes_;
};

// A gamma sub-transaction whose partner has not executed yet.
struct ParkedTx {
  Transaction tx;
  BlockId block;
};
using ParkedSet = std::map<TxId, ParkedTx>;
using OutcomeMap = std::unordered_map<TxId, Outcome>;

struct SortedHistory {
  BlockId root;
  std::vector<BlockIndex> order;
  std::optional<BlockId> excluded_before;
  std::optional<Round> watermark;
};

// Everything a node has finalized so far.
struct CommitContext {
  KvState state;
  ParkedSet parked;
  OutcomeMap finals;
  Bits committed;
  std::optional<BlockId> last_leader;
  Round watermark = 1;

  bool is_committed(BlockIndex i) const { return test_bit(committed, i); }
};

// Uncommitted sub-DAG of root at or above the watermark, ordered by (round, author).
SortedHistory sorted_history(const DagView& view, const BlockId& root, const Bits* committed = nullptr,
                             std::optional<Round> watermark = std::nullopt,
                             std::optional<BlockId> excluded_before = std::nullopt);
SortedHistory sorted_history(const DagView& view, const BlockId& root, const CommitContext& ctx);

struct ExecStop {
  BlockIndex block = kNoBlock;
  std::size_t tx_index = 0;  // inclusive
};

struct ExecOutput {
  OutcomeMap outcomes;
  // Gamma subs left without their partner, in encounter order.
  std::vector<TxId> newly_parked;
};

// Outcome of one transaction against a read/write surface; conditional transactions are
// resolved against `seen`.
Outcome apply_transaction(const Transaction& t, Overlay& state, const OutcomeMap& run, const OutcomeMap* prior);
std::pair<Outcome, Outcome> apply_pair(const Transaction& a, const Transaction& b, Overlay& state);

// Runs blocks in order under the gamma pairing rule. `parked` carries subs from earlier
// runs and is updated in place. `prior` resolves conditional predecessors that executed
// before this run.
ExecOutput execute_blocks(const BlockStore& store, const std::vector<BlockIndex>& order, Overlay& state,
                          ParkedSet& parked, const OutcomeMap* prior, std::optional<ExecStop> stop = std::nullopt);

// Executes a sorted history on a copy of `state`; the history's blocks are not marked committed.
std::pair<KvState, OutcomeMap> execute_history(const KvState& state, const DagView& view, const SortedHistory& hist,
                                               ParkedSet& parked, const OutcomeMap* prior = nullptr);

// Uncommitted blocks reachable from any of `roots`, at or above ctx's watermark, sorted.
std::vector<BlockIndex> sorted_union(const DagView& view, const CommitContext& ctx, const std::vector<BlockIndex>& roots);

// Runs `order` on top of ctx's committed state without mutating ctx.
OutcomeMap run_sequence(const DagView& view, const CommitContext& ctx, const std::vector<BlockIndex>& order,
                        std::optional<ExecStop> stop = std::nullopt);

// TO of the i-th transaction of b: H_b[:-1] followed by t_1..t_i. Empty when the
// transaction is a gamma sub that cannot execute within that prefix.
std::optional<Outcome> transaction_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b, std::size_t i);
OutcomeMap block_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b);

struct FinalizedBlock {
  BlockId block;
  BlockId leader;
};

// Executes the histories of newly committed leaders in order, updating ctx. Returns the
// outcomes that became final (including parked subs released by a partner).
OutcomeMap finalize_committed(CommitContext& ctx, const DagView& view, const std::vector<BlockId>& new_leaders,
                              std::uint32_t look_back, std::vector<FinalizedBlock>* executed = nullptr);

}  // namespace lemonshark
