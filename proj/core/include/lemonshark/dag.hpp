#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "lemonshark/types.hpp"

namespace lemonshark {

using BlockIndex = std::uint32_t;
inline constexpr BlockIndex kNoBlock = std::numeric_limits<BlockIndex>::max();
using Bits = boost::dynamic_bitset<std::uint64_t>;

std::uint32_t shard_in_charge(NodeId author, Round round, const ProtocolParams& params);
NodeId author_in_charge(std::uint32_t shard, Round round, const ProtocolParams& params);
std::uint32_t wave_of(Round round);
inline Round wave_first_round(std::uint32_t wave) { return 4 * wave - 3; }

// Structural validity of a block independent of any view.
void validate_block(const Block& b, const ProtocolParams& params);

inline bool test_bit(const Bits& bits, BlockIndex i) { return i < bits.size() && bits.test(i); }

// Append-only registry of every block ever broadcast. Ancestry depends only on block
// content, so one store backs all node views of a simulation.
class BlockStore {
 public:
  explicit BlockStore(ProtocolParams params);

  const ProtocolParams& params() const { return params_; }

  // Identical re-registration returns the existing index; a different block under the
  // same id is equivocation.
  BlockIndex add(const Block& b);
  BlockIndex find(const BlockId& id) const;
  BlockIndex find(NodeId author, Round round) const;
  const Block& block(BlockIndex i) const { return blocks_.at(i); }
  // Reflexive: a block is its own ancestor.
  const Bits& ancestors(BlockIndex i) const { return ancestors_.at(i); }
  bool reaches(BlockIndex from, BlockIndex to) const { return test_bit(ancestors_.at(from), to); }
  std::size_t size() const { return blocks_.size(); }
  Round max_round() const { return static_cast<Round>(by_round_.empty() ? 0 : by_round_.size() - 1); }

  // Scratch memo for pure per-block functions (vote classification). -1 = unknown.
  std::vector<std::int8_t>& vote_memo() const { return vote_memo_; }

 private:
  ProtocolParams params_;
  std::vector<Block> blocks_;
  std::vector<Bits> ancestors_;
  std::vector<std::vector<BlockIndex>> by_round_;
  mutable std::vector<std::int8_t> vote_memo_;
};

class DagView {
 public:
  DagView(std::shared_ptr<BlockStore> store, NodeId owner);

  NodeId owner() const { return owner_; }
  const BlockStore& store() const { return *store_; }
  const ProtocolParams& params() const { return store_->params(); }

  // Validates, registers the block globally if new, and adds it to this view. Every
  // parent must already be in the view.
  BlockIndex insert_block(const Block& b);
  BlockIndex insert_index(BlockIndex i);

  bool contains(const BlockId& id) const;
  bool contains_index(BlockIndex i) const { return test_bit(present_, i); }
  // Throws IncompleteView when the block is not in this view.
  BlockIndex index_of(const BlockId& id) const;
  const Block& block(const BlockId& id) const { return store_->block(index_of(id)); }
  const std::vector<BlockIndex>& round_blocks(Round r) const;
  std::size_t round_count(Round r) const { return round_blocks(r).size(); }
  Round max_round() const { return static_cast<Round>(by_round_.empty() ? 0 : by_round_.size() - 1); }
  const std::vector<BlockIndex>& delivered_order() const { return delivered_; }
  const Bits& present() const { return present_; }

  std::optional<BlockId> last_committed_leader;

 private:
  std::shared_ptr<BlockStore> store_;
  NodeId owner_;
  Bits present_;
  std::vector<std::vector<BlockIndex>> by_round_;
  std::vector<BlockIndex> delivered_;
};

bool has_path(const DagView& view, const BlockId& from, const BlockId& to);
// Number of round-`at_round` blocks in the view with a path to b.
std::size_t path_count(const DagView& view, BlockIndex b, Round at_round);
bool persists(const DagView& view, const BlockId& b, Round at_round);
bool persists_index(const DagView& view, BlockIndex b, Round at_round);

}  // namespace lemonshark
