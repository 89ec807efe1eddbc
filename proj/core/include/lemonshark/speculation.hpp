#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lemonshark/early_finality.hpp"
#include "lemonshark/scenario.hpp"

namespace lemonshark {

enum class ChainStatus : std::uint8_t { Pending, SpeculativelySent, Confirmed, Aborted };
std::string to_string(ChainStatus s);

struct ChainElement {
  Transaction tx;
  ChainStatus status = ChainStatus::Pending;
  std::optional<BlockId> block;
  std::size_t index = 0;  // position inside `block`
};

struct TxChain {
  ChainSpec spec;
  std::vector<ChainElement> txs;  // current incarnation of each logical position
  std::vector<TxId> retired;      // txids of incarnations that aborted
  std::uint32_t issued = 0;
  std::uint32_t aborts = 0;
  std::optional<Round> completed_round;
  Round first_placed = 0;
};

// Best current TO estimate for the i-th tx of b at one node; a finalized outcome wins.
std::optional<Outcome> speculate_outcome(const DagView& view, const CommitContext& ctx, const BlockId& b, std::size_t i);

// Known outcome of a tx at one node: final, else STO.
std::optional<Outcome> known_outcome(const FinalityLedger& ledger, TxId id);

// Advances statuses from the ledger. Returns true when anything changed. On an abort the
// failing element and every later one return to Pending for resubmission.
bool resolve_chain(const FinalityLedger& ledger, TxChain& chain, Round now);

TxId chain_txid(NodeId client, std::uint32_t seq);
Key chain_key(const ChainSpec& c);

class ChainDriver {
 public:
  using Speculate = std::function<std::optional<Outcome>(const BlockId&, std::size_t)>;
  using InView = std::function<bool(const BlockId&)>;

  ChainDriver(std::vector<ChainSpec> specs, ChainMode mode, std::uint32_t n);

  // Transactions the creator of block `at` (in charge of `shard`) appends. `first_index`
  // is the block position the first returned tx will occupy.
  std::vector<Transaction> take(std::uint32_t shard, const BlockId& at, std::size_t first_index, const Speculate& spec,
                                const InView& in_view);
  bool resolve(const FinalityLedger& ledger, Round now);

  const std::vector<TxChain>& chains() const { return chains_; }
  ChainMode mode() const { return mode_; }
  bool all_complete() const;

 private:
  std::vector<TxChain> chains_;
  ChainMode mode_;
  std::uint32_t n_;
};

}  // namespace lemonshark
