#include "lemonshark/consensus.hpp"

#include <algorithm>

#include "lemonshark/rng.hpp"

namespace lemonshark {

LeaderSchedule::LeaderSchedule(const ProtocolParams& params) : n_(params.n), seed_(params.coin_seed) {}

NodeId LeaderSchedule::steady_leader(Round round) const {
  if (round < 1 || !is_leader_round(round)) throw ProtocolError("round " + std::to_string(round) + " has no steady leader");
  const std::size_t k = (round - 1) / 2;
  while (steady_.size() <= k) {
    const std::size_t i = steady_.size();
    const std::uint64_t h = keyed(seed_, {0x57ead1ULL, i});
    if (i == 0 || n_ == 1) {
      steady_.push_back(static_cast<NodeId>(h % n_));
    } else {
      const NodeId prev = steady_.back();
      steady_.push_back(static_cast<NodeId>((prev + 1 + h % (n_ - 1)) % n_));
    }
  }
  return steady_[k];
}

NodeId LeaderSchedule::fallback_leader(std::uint32_t wave) const {
  return static_cast<NodeId>(keyed(seed_, {0xc017ULL, wave}) % n_);
}

BlockIndex steady_block(const BlockStore& store, const LeaderSchedule& sched, Round round) {
  return store.find(sched.steady_leader(round), round);
}

BlockIndex fallback_block(const BlockStore& store, const LeaderSchedule& sched, std::uint32_t wave) {
  return store.find(sched.fallback_leader(wave), wave_first_round(wave));
}

namespace {

template <typename Fn>
void for_round(const BlockStore& store, const Bits& scope, Round r, Fn&& fn) {
  const auto n = store.params().n;
  for (NodeId a = 0; a < n; ++a) {
    const BlockIndex x = store.find(a, r);
    if (x != kNoBlock && test_bit(scope, x)) fn(x);
  }
}

}  // namespace

VoteType classify_vote(const BlockStore& store, const LeaderSchedule& sched, BlockIndex first) {
  auto& memo = store.vote_memo();
  if (memo.at(first) >= 0) return static_cast<VoteType>(memo[first]);
  const Block& b = store.block(first);
  if (!LeaderSchedule::is_wave_first_round(b.id.round)) throw ProtocolError("vote type is fixed by a wave's first-round block");
  const std::uint32_t w = wave_of(b.id.round);
  VoteType t = VoteType::Fallback;
  if (w == 1) {
    t = VoteType::Steady;
  } else {
    const Bits& scope = store.ancestors(first);
    const std::size_t q = store.params().quorum();
    const BlockIndex s2 = steady_block(store, sched, 4 * (w - 1) - 1);
    const BlockIndex fb = fallback_block(store, sched, w - 1);
    if (s2 != kNoBlock && store.reaches(first, s2) && steady_votes(store, sched, scope, s2) >= q) {
      t = VoteType::Steady;
    } else if (fb != kNoBlock && store.reaches(first, fb) && fallback_votes(store, sched, scope, fb) >= q) {
      t = VoteType::Steady;
    }
  }
  memo[first] = static_cast<std::int8_t>(t);
  return t;
}

std::optional<VoteType> vote_type_of(const BlockStore& store, const LeaderSchedule& sched, BlockIndex voter) {
  const Block& b = store.block(voter);
  const BlockIndex first = store.find(b.id.author, wave_first_round(wave_of(b.id.round)));
  if (first == kNoBlock || !store.reaches(voter, first)) return std::nullopt;
  return classify_vote(store, sched, first);
}

std::size_t steady_votes(const BlockStore& store, const LeaderSchedule& sched, const Bits& scope, BlockIndex leader) {
  std::size_t c = 0;
  for_round(store, scope, store.block(leader).id.round + 1, [&](BlockIndex x) {
    if (store.reaches(x, leader) && vote_type_of(store, sched, x) == VoteType::Steady) ++c;
  });
  return c;
}

std::size_t fallback_votes(const BlockStore& store, const LeaderSchedule& sched, const Bits& scope, BlockIndex leader) {
  const Round r = store.block(leader).id.round;
  std::size_t c = 0;
  for_round(store, scope, r + 3, [&](BlockIndex x) {
    if (store.reaches(x, leader) && vote_type_of(store, sched, x) == VoteType::Fallback) ++c;
  });
  return c;
}

VoterCensus voter_census(const DagView& view, const LeaderSchedule& sched, std::uint32_t wave) {
  VoterCensus c;
  const Round r = wave_first_round(wave);
  for (NodeId a = 0; a < view.params().n; ++a) {
    const BlockIndex x = view.store().find(a, r);
    if (x == kNoBlock || !view.contains_index(x)) {
      ++c.unknown;
    } else if (classify_vote(view.store(), sched, x) == VoteType::Steady) {
      ++c.steady;
    } else {
      ++c.fallback;
    }
  }
  return c;
}

WaveRecord describe_wave(const DagView& view, const LeaderSchedule& sched, std::uint32_t wave) {
  WaveRecord w;
  w.wave = wave;
  const Round r1 = wave_first_round(wave);
  const auto& store = view.store();
  w.steady1 = BlockId{sched.steady_leader(r1), r1};
  w.steady2 = BlockId{sched.steady_leader(r1 + 2), r1 + 2};
  const Bits& scope = view.present();
  if (auto i = store.find(w.steady1); i != kNoBlock && view.contains_index(i)) w.steady1_votes = steady_votes(store, sched, scope, i);
  if (auto i = store.find(w.steady2); i != kNoBlock && view.contains_index(i)) w.steady2_votes = steady_votes(store, sched, scope, i);
  if (view.round_count(r1 + 3) > 0) {
    w.fallback = BlockId{sched.fallback_leader(wave), r1};
    if (auto i = store.find(*w.fallback); i != kNoBlock && view.contains_index(i))
      w.fallback_votes = fallback_votes(store, sched, scope, i);
  }
  return w;
}

namespace {

struct Candidate {
  BlockIndex block = kNoBlock;
  bool steady = false;
  bool fallback = false;
};

std::vector<Candidate> slot_candidates(const BlockStore& store, const LeaderSchedule& sched, Round r) {
  std::vector<Candidate> out;
  if (const BlockIndex s = steady_block(store, sched, r); s != kNoBlock) out.push_back({s, true, false});
  if (LeaderSchedule::is_wave_first_round(r)) {
    if (const BlockIndex fb = fallback_block(store, sched, wave_of(r)); fb != kNoBlock) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Candidate& c) { return c.block == fb; });
      if (it != out.end()) it->fallback = true;
      else out.push_back({fb, false, true});
    }
  }
  return out;
}

struct IndirectVerdict {
  bool commit = false;
  bool both_weak = false;
};

IndirectVerdict indirect_verdict(const BlockStore& store, const LeaderSchedule& sched, const Bits& scope, const Candidate& c) {
  const std::size_t weak = store.params().weak_quorum();
  const Round r = store.block(c.block).id.round;
  const std::uint32_t w = wave_of(r);
  IndirectVerdict v;
  const BlockIndex fb = fallback_block(store, sched, w);
  const std::size_t fb_votes = fb == kNoBlock ? 0 : fallback_votes(store, sched, scope, fb);
  if (c.steady) {
    const std::size_t mine = steady_votes(store, sched, scope, c.block);
    if (mine >= weak && fb_votes < weak) v.commit = true;
    if (mine < weak && fb_votes < weak) v.both_weak = true;
  }
  if (c.fallback && !v.commit) {
    std::size_t other = 0;
    for (Round sr : {wave_first_round(w), wave_first_round(w) + 2})
      if (const BlockIndex s = steady_block(store, sched, sr); s != kNoBlock)
        other = std::max(other, steady_votes(store, sched, scope, s));
    const std::size_t mine = fallback_votes(store, sched, scope, c.block);
    if (mine >= weak && other < weak) {
      v.commit = true;
      v.both_weak = false;
    } else if (mine < weak && other < weak) {
      v.both_weak = true;
    }
  }
  return v;
}

}  // namespace

std::vector<BlockId> try_commit(const DagView& view, const LeaderSchedule& sched, LeaderRecord& record, Round current_round) {
  const auto& store = view.store();
  const std::size_t q = view.params().quorum();
  std::vector<BlockId> fresh;
  Round next = record.committed.empty() ? 1 : record.committed.back().id.round + 2;
  for (Round r = next; r <= view.max_round(); r += 2) {
    const auto cands = slot_candidates(store, sched, r);
    BlockIndex direct = kNoBlock;
    std::size_t direct_hits = 0;
    for (const auto& c : cands) {
      if (!view.contains_index(c.block)) continue;
      bool hit = false;
      if (c.steady && steady_votes(store, sched, view.present(), c.block) >= q) hit = true;
      if (c.fallback && fallback_votes(store, sched, view.present(), c.block) >= q) hit = true;
      if (hit) {
        direct = c.block;
        ++direct_hits;
      }
    }
    if (direct_hits > 1) throw ProtocolError("two leader types committed directly in one wave slot");
    if (direct == kNoBlock) continue;

    // Walk back to the last committed leader, then commit oldest first.
    std::vector<BlockIndex> chain{direct};
    BlockIndex cur = direct;
    for (Round s = r; s >= next + 2; s -= 2) {
      const Round slot = s - 2;
      for (const auto& c : slot_candidates(store, sched, slot)) {
        if (!store.reaches(cur, c.block)) continue;
        const auto verdict = indirect_verdict(store, sched, store.ancestors(cur), c);
        if (verdict.commit) {
          chain.push_back(c.block);
          cur = c.block;
          break;
        }
        if (verdict.both_weak) ++record.indirect_skips;
      }
    }
    std::reverse(chain.begin(), chain.end());
    for (BlockIndex b : chain) {
      const BlockId id = store.block(b).id;
      record.committed.push_back({id, current_round, b == direct});
      if (record.committed_leaders.size() <= b) record.committed_leaders.resize(std::max<std::size_t>(b + 1, store.size()));
      record.committed_leaders.set(b);
      fresh.push_back(id);
    }
    next = r + 2;
  }
  return fresh;
}

}  // namespace lemonshark
