#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace lemonshark {

using NodeId = std::uint32_t;
using Round = std::uint32_t;
using Tick = std::uint64_t;
using TxId = std::uint64_t;
using Value = std::int64_t;

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : ProtocolError {
  using ProtocolError::ProtocolError;
};
struct InvalidBlock : ProtocolError {
  using ProtocolError::ProtocolError;
};
struct EquivocationError : ProtocolError {
  using ProtocolError::ProtocolError;
};
// Raised when a query needs a block the local view has not received.
struct IncompleteView : ProtocolError {
  using ProtocolError::ProtocolError;
};

struct ProtocolParams {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t v = 8;
  std::uint64_t coin_seed = 0;

  std::uint32_t shard_count() const { return n; }
  std::uint32_t quorum() const { return 2 * f + 1; }
  std::uint32_t weak_quorum() const { return f + 1; }

  void validate() const;
  static ProtocolParams with_faults(std::uint32_t f, std::uint64_t coin_seed = 0);
};

// Natural order is (round, author): the tie-break used by sorted histories.
struct BlockId {
  NodeId author = 0;
  Round round = 0;

  friend bool operator==(const BlockId&, const BlockId&) = default;
  friend std::strong_ordering operator<=>(const BlockId& a, const BlockId& b) {
    if (auto c = a.round <=> b.round; c != 0) return c;
    return a.author <=> b.author;
  }
};

struct Key {
  std::uint32_t shard = 0;
  std::uint32_t key = 0;
  friend auto operator<=>(const Key&, const Key&) = default;
};

enum class TxKind : std::uint8_t { Alpha, Beta, GammaSub };

struct Body {
  enum class Op : std::uint8_t { Put, CopyReadToWrite, AddReadToWrite };
  Op op = Op::Put;
  Value arg = 0;

  static Body put(Value v) { return {Op::Put, v}; }
  static Body copy() { return {Op::CopyReadToWrite, 0}; }
  static Body add(Value c) { return {Op::AddReadToWrite, c}; }
  friend bool operator==(const Body&, const Body&) = default;
};

struct Outcome {
  TxId txid = 0;
  std::vector<std::pair<Key, Value>> writes_applied;
  std::vector<std::pair<Key, Value>> reads_seen;
  bool aborted = false;
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Condition {
  TxId pred = 0;
  Outcome expected;
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Transaction {
  TxId txid = 0;
  TxKind kind = TxKind::Alpha;
  std::vector<Key> reads;
  std::vector<Key> writes;
  Body body;
  std::optional<TxId> partner;
  std::optional<Condition> condition;

  bool modifies(const Key& k) const;
  bool touches(const Key& k) const;
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct Block {
  BlockId id;
  std::uint32_t shard = 0;
  std::vector<BlockId> parents;
  std::vector<Transaction> txs;

  bool modifies(const Key& k) const;
  friend bool operator==(const Block&, const Block&) = default;
};

// Shape rules for one transaction in isolation (partner symmetry is checked by callers
// holding both halves).
void validate_transaction(const Transaction& tx);

std::string to_string(TxKind k);
TxKind tx_kind_from_string(const std::string& s);
std::string to_string(const BlockId& id);

// Canonical JSON: fixed field order, 64-bit integers rendered as decimal strings.
nlohmann::ordered_json to_json(const Key& k);
nlohmann::ordered_json to_json(const Outcome& o);
nlohmann::ordered_json to_json(const Transaction& t);
nlohmann::ordered_json to_json(const Block& b);
nlohmann::ordered_json to_json(const BlockId& id);

Key key_from_json(const nlohmann::json& j);
Outcome outcome_from_json(const nlohmann::json& j);
Transaction transaction_from_json(const nlohmann::json& j);
Block block_from_json(const nlohmann::json& j);
BlockId block_id_from_json(const nlohmann::json& j);

// Accepts a JSON number or a decimal string.
std::uint64_t u64_from_json(const nlohmann::json& j);
std::int64_t i64_from_json(const nlohmann::json& j);

}  // namespace lemonshark

template <>
struct std::hash<lemonshark::BlockId> {
  std::size_t operator()(const lemonshark::BlockId& id) const noexcept {
    return (static_cast<std::size_t>(id.round) << 20) ^ id.author;
  }
};

template <>
struct std::hash<lemonshark::Key> {
  std::size_t operator()(const lemonshark::Key& k) const noexcept {
    return (static_cast<std::size_t>(k.shard) << 32) ^ k.key;
  }
};
