#include "lemonshark/dag.hpp"

#include <algorithm>
#include <set>

namespace lemonshark {

std::uint32_t shard_in_charge(NodeId author, Round round, const ProtocolParams& params) {
  if (round < 1) throw ProtocolError("rounds start at 1");
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(author) + round - 1) % params.n);
}

NodeId author_in_charge(std::uint32_t shard, Round round, const ProtocolParams& params) {
  const std::uint64_t n = params.n;
  return static_cast<NodeId>((shard + n - (round - 1) % n) % n);
}

std::uint32_t wave_of(Round round) {
  if (round < 1) throw ProtocolError("rounds start at 1");
  return (round + 3) / 4;
}

void validate_block(const Block& b, const ProtocolParams& params) {
  if (b.id.round < 1) throw InvalidBlock("round must be positive");
  if (b.id.author >= params.n) throw InvalidBlock("author out of range");
  if (b.shard != shard_in_charge(b.id.author, b.id.round, params))
    throw InvalidBlock("block shard does not match the rotation");
  if (b.id.round == 1) {
    if (!b.parents.empty()) throw InvalidBlock("round-1 blocks have no parents");
  } else {
    std::set<NodeId> authors;
    for (const auto& p : b.parents) {
      if (p.round + 1 != b.id.round) throw InvalidBlock("parent from a non-adjacent round");
      if (!authors.insert(p.author).second) throw InvalidBlock("duplicate parent");
    }
    if (authors.size() < params.quorum()) throw InvalidBlock("fewer than 2f+1 parents");
  }
  for (const auto& t : b.txs) {
    validate_transaction(t);
    for (const auto& w : t.writes)
      if (w.shard != b.shard) throw InvalidBlock("write outside the block's shard");
  }
}

BlockStore::BlockStore(ProtocolParams params) : params_(params) { params_.validate(); }

BlockIndex BlockStore::find(NodeId author, Round round) const {
  if (round >= by_round_.size() || author >= params_.n) return kNoBlock;
  return by_round_[round][author];
}

BlockIndex BlockStore::find(const BlockId& id) const { return find(id.author, id.round); }

BlockIndex BlockStore::add(const Block& b) {
  validate_block(b, params_);
  if (auto existing = find(b.id); existing != kNoBlock) {
    if (blocks_[existing] == b) return existing;
    throw EquivocationError("conflicting block for " + to_string(b.id));
  }
  const auto idx = static_cast<BlockIndex>(blocks_.size());
  Bits anc(idx + 1);
  for (const auto& p : b.parents) {
    const BlockIndex pi = find(p);
    if (pi == kNoBlock) throw IncompleteView("parent " + to_string(p) + " not registered");
    Bits pa = ancestors_[pi];
    pa.resize(idx + 1);
    anc |= pa;
  }
  anc.set(idx);
  blocks_.push_back(b);
  ancestors_.push_back(std::move(anc));
  if (by_round_.size() <= b.id.round) by_round_.resize(b.id.round + 1, std::vector<BlockIndex>(params_.n, kNoBlock));
  by_round_[b.id.round][b.id.author] = idx;
  vote_memo_.push_back(-1);
  return idx;
}

DagView::DagView(std::shared_ptr<BlockStore> store, NodeId owner) : store_(std::move(store)), owner_(owner) {
  if (!store_) throw ProtocolError("view requires a block store");
}

BlockIndex DagView::insert_block(const Block& b) {
  for (const auto& p : b.parents)
    if (!contains(p)) throw IncompleteView("parent " + to_string(p) + " missing from view");
  return insert_index(store_->add(b));
}

BlockIndex DagView::insert_index(BlockIndex i) {
  if (contains_index(i)) return i;
  const Block& b = store_->block(i);
  for (const auto& p : b.parents)
    if (!contains(p)) throw IncompleteView("parent " + to_string(p) + " missing from view");
  if (present_.size() <= i) present_.resize(std::max<std::size_t>(i + 1, present_.size() * 2));
  present_.set(i);
  if (by_round_.size() <= b.id.round) by_round_.resize(b.id.round + 1);
  by_round_[b.id.round].push_back(i);
  delivered_.push_back(i);
  return i;
}

bool DagView::contains(const BlockId& id) const {
  const BlockIndex i = store_->find(id);
  return i != kNoBlock && contains_index(i);
}

BlockIndex DagView::index_of(const BlockId& id) const {
  const BlockIndex i = store_->find(id);
  if (i == kNoBlock || !contains_index(i)) throw IncompleteView("block " + to_string(id) + " not in view");
  return i;
}

const std::vector<BlockIndex>& DagView::round_blocks(Round r) const {
  static const std::vector<BlockIndex> empty;
  return r < by_round_.size() ? by_round_[r] : empty;
}

bool has_path(const DagView& view, const BlockId& from, const BlockId& to) {
  const BlockIndex a = view.index_of(from);
  const BlockIndex b = view.index_of(to);
  return view.store().reaches(a, b);
}

std::size_t path_count(const DagView& view, BlockIndex b, Round at_round) {
  std::size_t c = 0;
  for (BlockIndex x : view.round_blocks(at_round))
    if (view.store().reaches(x, b)) ++c;
  return c;
}

bool persists_index(const DagView& view, BlockIndex b, Round at_round) {
  return path_count(view, b, at_round) >= view.params().weak_quorum();
}

bool persists(const DagView& view, const BlockId& b, Round at_round) {
  if (!view.contains(b)) return false;
  return persists_index(view, view.index_of(b), at_round);
}

}  // namespace lemonshark
