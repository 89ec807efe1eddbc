#include "lemonshark/speculation.hpp"

namespace lemonshark {

std::string to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::Pending: return "pending";
    case ChainStatus::SpeculativelySent: return "speculatively_sent";
    case ChainStatus::Confirmed: return "confirmed";
    case ChainStatus::Aborted: return "aborted";
  }
  return "?";
}

std::optional<Outcome> speculate_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b, std::size_t i) {
  if (!view.contains(b)) return std::nullopt;
  const auto& blk = view.block(b);
  if (i >= blk.txs.size()) return std::nullopt;
  if (auto it = ctx.finals.find(blk.txs[i].txid); it != ctx.finals.end()) return it->second;
  if (ctx.is_committed(view.index_of(b))) return std::nullopt;
  return transaction_outcome(view, ctx, b, i);
}

std::optional<Outcome> known_outcome(const FinalityLedger& ledger, TxId id) {
  const auto* e = ledger.find(id);
  if (!e) return std::nullopt;
  if (e->final_outcome) return e->final_outcome;
  return e->sto_outcome;
}

TxId chain_txid(NodeId client, std::uint32_t seq) {
  return (1ULL << 63) | (static_cast<TxId>(client) << 32) | seq;
}

Key chain_key(const ChainSpec& c) { return Key{c.shard, 2000 + c.client}; }

namespace {

void abort_from(TxChain& chain, std::size_t i) {
  ++chain.aborts;
  for (std::size_t j = i; j < chain.txs.size(); ++j) {
    auto& e = chain.txs[j];
    if (e.status == ChainStatus::SpeculativelySent) chain.retired.push_back(e.tx.txid);
    e.status = ChainStatus::Pending;
    e.block.reset();
  }
}

}  // namespace

bool resolve_chain(const FinalityLedger& ledger, TxChain& chain, Round now) {
  if (chain.completed_round) return false;
  bool changed = false;
  for (std::size_t i = 0; i < chain.txs.size(); ++i) {
    auto& e = chain.txs[i];
    if (e.status == ChainStatus::Confirmed) continue;
    if (e.status != ChainStatus::SpeculativelySent) break;
    if (auto k = known_outcome(ledger, e.tx.txid)) {
      if (k->aborted) {
        abort_from(chain, i);
        return true;
      }
      e.status = ChainStatus::Confirmed;
      changed = true;
      continue;
    }
    // A settled predecessor that contradicts the speculation dooms this element now.
    if (i > 0 && e.tx.condition) {
      auto p = known_outcome(ledger, e.tx.condition->pred);
      if (p && !(*p == e.tx.condition->expected)) {
        abort_from(chain, i);
        return true;
      }
    }
    break;
  }
  if (!chain.txs.empty() && chain.txs.back().status == ChainStatus::Confirmed) {
    chain.completed_round = now;
    changed = true;
  }
  return changed;
}

ChainDriver::ChainDriver(std::vector<ChainSpec> specs, ChainMode mode, std::uint32_t n) : mode_(mode), n_(n) {
  for (auto& s : specs) {
    TxChain c;
    c.spec = s;
    c.txs.resize(s.length);
    chains_.push_back(std::move(c));
  }
}

std::vector<Transaction> ChainDriver::take(std::uint32_t shard, const BlockId& at, std::size_t first_index,
                                           const Speculate& spec, const InView& in_view) {
  std::vector<Transaction> out;
  for (auto& c : chains_) {
    if (c.spec.shard != shard || c.completed_round) continue;
    std::size_t i = 0;
    while (i < c.txs.size() && c.txs[i].status != ChainStatus::Pending) ++i;
    if (i == c.txs.size()) continue;
    std::optional<Condition> cond;
    if (i > 0) {
      const auto& prev = c.txs[i - 1];
      if (mode_ == ChainMode::Sequential) {
        if (prev.status != ChainStatus::Confirmed) continue;
      } else {
        if (!prev.block || prev.block->round >= at.round || !in_view(*prev.block)) continue;
        auto o = spec(*prev.block, prev.index);
        // Building on a predecessor expected to abort would chain onto a no-op.
        if (!o || o->aborted) continue;
        cond = Condition{prev.tx.txid, std::move(*o)};
      }
    }
    Transaction t;
    t.txid = chain_txid(c.spec.client, c.issued++);
    t.kind = c.spec.kind;
    const Key k = chain_key(c.spec);
    t.reads.push_back(k);
    if (c.spec.kind == TxKind::Beta) t.reads.push_back(Key{(shard + 1) % n_, 0});
    t.writes.push_back(k);
    t.body = Body::add(1);
    t.condition = std::move(cond);
    auto& e = c.txs[i];
    e.tx = t;
    e.status = ChainStatus::SpeculativelySent;
    e.block = at;
    e.index = first_index + out.size();
    if (c.first_placed == 0) c.first_placed = at.round;
    out.push_back(std::move(t));
  }
  return out;
}

bool ChainDriver::resolve(const FinalityLedger& ledger, Round now) {
  bool changed = false;
  for (auto& c : chains_) changed |= resolve_chain(ledger, c, now);
  return changed;
}

bool ChainDriver::all_complete() const {
  for (const auto& c : chains_)
    if (!c.completed_round) return false;
  return true;
}

}  // namespace lemonshark
