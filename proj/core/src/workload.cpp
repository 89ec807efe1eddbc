#include "lemonshark/workload.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "lemonshark/rng.hpp"

namespace lemonshark {

std::uint32_t plan_write_key(std::uint64_t seed, std::uint32_t shard, Round round, std::size_t i, std::uint32_t keys) {
  return static_cast<std::uint32_t>(keyed(seed, {0x91a4ULL, shard, round, i}) % keys);
}

TxId block_txid(NodeId author, Round round, std::size_t idx) {
  return (static_cast<TxId>(round) << 32) | (static_cast<TxId>(author) << 16) | idx;
}

Workload::Workload(const Scenario& sc) : params_(sc.params), spec_(sc.workload), seed_(sc.seed) {}

Transaction Workload::alpha(std::uint64_t h, std::uint32_t shard, std::uint32_t wkey, TxId id) const {
  Transaction t;
  t.txid = id;
  t.kind = TxKind::Alpha;
  t.reads.push_back(Key{shard, static_cast<std::uint32_t>((h >> 8) % spec_.keys_per_shard)});
  t.writes.push_back(Key{shard, wkey});
  const Value arg = static_cast<Value>((h >> 20) & 0xffff) + 1;
  switch ((h >> 16) % 3) {
    case 0: t.body = Body::put(arg); break;
    case 1: t.body = Body::copy(); break;
    default: t.body = Body::add(arg); break;
  }
  return t;
}

std::uint32_t Workload::foreign_read_key(std::uint32_t j, Round round, std::uint64_t h) const {
  const auto K = spec_.keys_per_shard;
  const auto T = std::max<std::uint32_t>(spec_.txs_per_block, 1);
  if ((h >> 32) % 100 < spec_.cross_shard_failure_pct) return plan_write_key(seed_, j, round, (h >> 40) % T, K);
  std::set<std::uint32_t> plan;
  for (std::uint32_t u = 0; u < spec_.txs_per_block; ++u) plan.insert(plan_write_key(seed_, j, round, u, K));
  const auto start = static_cast<std::uint32_t>((h >> 40) % K);
  for (std::uint32_t d = 0; d < K; ++d) {
    const auto k = (start + d) % K;
    if (!plan.count(k)) return k;
  }
  return start;
}

std::vector<Transaction> Workload::build(NodeId author, Round round, bool drain, ChainDriver* chains,
                                         const ChainDriver::Speculate& spec, const ChainDriver::InView& in_view) {
  const std::uint32_t shard = shard_in_charge(author, round, params_);
  const auto K = spec_.keys_per_shard;
  std::vector<Transaction> txs;

  if (!drain) {
    bool mixed = spec_.scope == CrossShardScope::Tx ||
                 keyed(seed_, {0xb10cULL, author, round}) % 100 < spec_.cross_shard_block_pct;
    std::vector<std::uint32_t> foreign;
    for (std::uint32_t s = 0; s < params_.n; ++s)
      if (s != shard) foreign.push_back(s);
    std::mt19937_64 rng(keyed(seed_, {0xf0e1ULL, author, round}));
    std::shuffle(foreign.begin(), foreign.end(), rng);
    foreign.resize(std::min<std::size_t>(foreign.size(), spec_.cross_shard_count));
    if (foreign.empty()) mixed = false;

    for (std::size_t i = 0; i < spec_.txs_per_block; ++i) {
      const std::uint64_t h = keyed(seed_, {0x7aULL, author, round, i});
      const TxId id = block_txid(author, round, i);
      const auto wkey = plan_write_key(seed_, shard, round, i, K);
      const auto roll = mixed ? h % 100 : 0;
      if (!mixed || roll < spec_.alpha_pct) {
        txs.push_back(alpha(h, shard, wkey, id));
        continue;
      }
      const std::uint32_t j = foreign[(h >> 8) % foreign.size()];
      if (roll < spec_.alpha_pct + spec_.beta_pct) {
        Transaction t;
        t.txid = id;
        t.kind = TxKind::Beta;
        t.reads = {Key{shard, static_cast<std::uint32_t>((h >> 12) % K)}, Key{j, foreign_read_key(j, round, h)}};
        t.writes = {Key{shard, wkey}};
        t.body = Body::add(static_cast<Value>((h >> 48) & 0xff) + 1);
        txs.push_back(std::move(t));
        continue;
      }
      const Key kx{j, kGammaKeyBase + static_cast<std::uint32_t>((h >> 12) % K)};
      const Key ky{shard, kGammaKeyBase + static_cast<std::uint32_t>((h >> 20) % K)};
      Transaction t1;
      t1.txid = id;
      t1.kind = TxKind::GammaSub;
      t1.reads = {kx};
      t1.writes = {ky};
      t1.body = Body::copy();
      t1.partner = id | kGammaPartnerBit;
      Transaction t2 = t1;
      t2.txid = id | kGammaPartnerBit;
      t2.reads = {ky};
      t2.writes = {kx};
      t2.partner = id;
      txs.push_back(std::move(t1));
      GammaSubmission g;
      g.t1 = id;
      g.t2 = t2.txid;
      g.home_shard = shard;
      g.target_shard = j;
      g.produced = round;
      g.target = round + static_cast<Round>((h >> 28) % (spec_.gamma_max_lag + 1));
      pool_[j].push_back(gamma_.size());
      gamma_.push_back(g);
      partner_tx_.push_back(std::move(t2));
    }
  }

  auto& pool = pool_[shard];
  std::vector<std::size_t> keep;
  for (std::size_t gi : pool) {
    if (gamma_[gi].target <= round) {
      gamma_[gi].placed = BlockId{author, round};
      txs.push_back(partner_tx_[gi]);
    } else {
      keep.push_back(gi);
    }
  }
  pool.swap(keep);

  if (chains) {
    auto extra = chains->take(shard, BlockId{author, round}, txs.size(), spec, in_view);
    for (auto& t : extra) txs.push_back(std::move(t));
  }
  return txs;
}

}  // namespace lemonshark
