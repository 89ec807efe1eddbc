#include "lemonshark/replica.hpp"

namespace lemonshark {

Replica::Replica(NodeId id, std::shared_ptr<BlockStore> store, const LeaderSchedule& sched, FinalityMode mode)
    : id_(id), sched_(sched), view_(store, id), engine_(store->params(), mode) {}

void Replica::insert(BlockIndex b) {
  view_.insert_index(b);
  engine_.on_block(view_, b);
  dirty_ = true;
}

void Replica::receive(BlockIndex b) {
  const auto& store = view_.store();
  pending_.insert(store.block(b).id);
  // Lowest rounds first, so one pass usually drains everything that became insertable.
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = pending_.begin(); it != pending_.end();) {
      const BlockIndex x = store.find(*it);
      bool ready = true;
      for (const auto& p : store.block(x).parents)
        if (!view_.contains(p)) {
          ready = false;
          break;
        }
      if (!ready) {
        ++it;
        continue;
      }
      insert(x);
      it = pending_.erase(it);
      progress = true;
    }
  }
}

void Replica::adopt_own(const Block& b) {
  insert(view_.insert_block(b));
  round_ = b.id.round;
}

void Replica::skip_to(Round r) {
  round_ = r;
  dirty_ = true;
}

bool Replica::step(Tick now, Network& net) {
  bool changed = false;
  auto fresh = try_commit(view_, sched_, record_, round_);
  if (!fresh.empty()) {
    auto outs = finalize_committed(commit_, view_, fresh, view_.params().v, &executed_);
    view_.last_committed_leader = record_.last();
    engine_.on_final(outs, round_, now);
    dirty_ = true;
    changed = true;
  }
  if (dirty_ && engine_.mode() != FinalityMode::BullsharkBaseline) {
    NodeContext ctx{view_, sched_, record_, commit_, round_, now,
                    [&net, this, now](const BlockId& c) { return net.query_missing(id_, c, now); }};
    changed |= engine_.evaluate(ctx) > 0;
  }
  dirty_ = false;
  return changed;
}

std::optional<Round> Replica::ready(Tick now, Tick leader_timeout, Round last) {
  if (round_ >= last) return std::nullopt;
  if (round_ == 0) return Round{1};
  const auto q = view_.params().quorum();
  Round top = 0;
  for (Round r = std::min(view_.max_round(), last - 1); r >= round_ && r > 0; --r)
    if (view_.round_count(r) >= q) {
      top = r;
      break;
    }
  if (top == 0 || top < round_) return std::nullopt;
  if (LeaderSchedule::is_leader_round(top) && !view_.contains(BlockId{sched_.steady_leader(top), top})) {
    if (wait_round_ != top) {
      wait_round_ = top;
      wait_since_ = now;
    }
    if (now - wait_since_ < leader_timeout) return std::nullopt;
  }
  return top + 1;
}

}  // namespace lemonshark
