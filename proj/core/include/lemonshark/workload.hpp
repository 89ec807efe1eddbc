#pragma once

#include <map>
#include <vector>

#include "lemonshark/scenario.hpp"
#include "lemonshark/speculation.hpp"

namespace lemonshark {

inline constexpr std::uint32_t kGammaKeyBase = 1000;
inline constexpr TxId kGammaPartnerBit = 1ULL << 62;

// Write key of the i-th planned transaction of the shard's round-r block.
std::uint32_t plan_write_key(std::uint64_t seed, std::uint32_t shard, Round round, std::size_t i, std::uint32_t keys);
TxId block_txid(NodeId author, Round round, std::size_t idx);

struct GammaSubmission {
  TxId t1 = 0;
  TxId t2 = 0;
  std::uint32_t home_shard = 0;    // shard of t1
  std::uint32_t target_shard = 0;  // shard t2 is routed to
  Round produced = 0;              // round of t1's block
  Round target = 0;                // earliest round t2 may be included
  std::optional<BlockId> placed;
};

// Deterministic client population. Base content of a block depends only on (seed, author,
// round); partner sub-transactions wait in per-shard pools for the next in-charge block.
class Workload {
 public:
  explicit Workload(const Scenario& sc);

  std::vector<Transaction> build(NodeId author, Round round, bool drain, ChainDriver* chains,
                                 const ChainDriver::Speculate& spec, const ChainDriver::InView& in_view);

  const std::vector<GammaSubmission>& gamma_submissions() const { return gamma_; }

 private:
  Transaction alpha(std::uint64_t h, std::uint32_t shard, std::uint32_t wkey, TxId id) const;
  std::uint32_t foreign_read_key(std::uint32_t j, Round round, std::uint64_t h) const;

  ProtocolParams params_;
  WorkloadSpec spec_;
  std::uint64_t seed_;
  std::map<std::uint32_t, std::vector<std::size_t>> pool_;  // shard -> indices into gamma_
  std::vector<GammaSubmission> gamma_;
  std::vector<Transaction> partner_tx_;  // parallel to gamma_
};

}  // namespace lemonshark
