#include "lemonshark/types.hpp"

#include <algorithm>
#include <set>

namespace lemonshark {

void ProtocolParams::validate() const {
  if (n != 3 * f + 1) throw ConfigError("n must equal 3f+1");
  if (v < 1) throw ConfigError("look-back constant v must be >= 1");
}

ProtocolParams ProtocolParams::with_faults(std::uint32_t f, std::uint64_t coin_seed) {
  ProtocolParams p;
  p.f = f;
  p.n = 3 * f + 1;
  p.coin_seed = coin_seed;
  return p;
}

bool Transaction::modifies(const Key& k) const {
  return std::find(writes.begin(), writes.end(), k) != writes.end();
}

bool Transaction::touches(const Key& k) const {
  return modifies(k) || std::find(reads.begin(), reads.end(), k) != reads.end();
}

bool Block::modifies(const Key& k) const {
  return std::any_of(txs.begin(), txs.end(), [&](const Transaction& t) { return t.modifies(k); });
}

void validate_transaction(const Transaction& tx) {
  if (tx.writes.empty()) throw InvalidBlock("transaction without writes");
  const std::uint32_t ws = tx.writes.front().shard;
  for (const auto& w : tx.writes)
    if (w.shard != ws) throw InvalidBlock("writes span several shards");
  switch (tx.kind) {
    case TxKind::Alpha:
      for (const auto& r : tx.reads)
        if (r.shard != ws) throw InvalidBlock("alpha transaction reads a foreign shard");
      if (tx.partner) throw InvalidBlock("alpha transaction carries a partner");
      break;
    case TxKind::Beta: {
      std::size_t foreign = 0;
      for (const auto& r : tx.reads)
        if (r.shard != ws) ++foreign;
      if (foreign != 1) throw InvalidBlock("beta transaction must read exactly one foreign key");
      if (tx.partner) throw InvalidBlock("beta transaction carries a partner");
      break;
    }
    case TxKind::GammaSub: {
      if (!tx.partner) throw InvalidBlock("gamma sub-transaction without partner");
      if (*tx.partner == tx.txid) throw InvalidBlock("gamma sub-transaction partnered with itself");
      std::set<std::uint32_t> foreign;
      for (const auto& r : tx.reads)
        if (r.shard != ws) foreign.insert(r.shard);
      if (foreign.size() > 1) throw InvalidBlock("gamma sub-transaction reads several foreign shards");
      if (tx.condition) throw InvalidBlock("gamma sub-transaction cannot be conditional");
      break;
    }
  }
}

std::string to_string(TxKind k) {
  switch (k) {
    case TxKind::Alpha: return "alpha";
    case TxKind::Beta: return "beta";
    case TxKind::GammaSub: return "gamma";
  }
  return "?";
}

TxKind tx_kind_from_string(const std::string& s) {
  if (s == "alpha" || s == "Alpha") return TxKind::Alpha;
  if (s == "beta" || s == "Beta") return TxKind::Beta;
  if (s == "gamma" || s == "GammaSub" || s == "Gamma") return TxKind::GammaSub;
  throw ConfigError("unknown transaction kind: " + s);
}

std::string to_string(const BlockId& id) {
  return "(" + std::to_string(id.author) + "," + std::to_string(id.round) + ")";
}

namespace {

std::string dec(std::uint64_t v) { return std::to_string(v); }
std::string dec(std::int64_t v) { return std::to_string(v); }

const char* op_name(Body::Op op) {
  switch (op) {
    case Body::Op::Put: return "Put";
    case Body::Op::CopyReadToWrite: return "CopyReadToWrite";
    case Body::Op::AddReadToWrite: return "AddReadToWrite";
  }
  return "?";
}

Body::Op op_from(const std::string& s) {
  if (s == "Put") return Body::Op::Put;
  if (s == "CopyReadToWrite") return Body::Op::CopyReadToWrite;
  if (s == "AddReadToWrite") return Body::Op::AddReadToWrite;
  throw ConfigError("unknown body op: " + s);
}

nlohmann::ordered_json kv_list(const std::vector<std::pair<Key, Value>>& kvs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [k, v] : kvs) {
    nlohmann::ordered_json e;
    e["shard"] = k.shard;
    e["key"] = k.key;
    e["value"] = dec(v);
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<std::pair<Key, Value>> kv_from(const nlohmann::json& j) {
  std::vector<std::pair<Key, Value>> out;
  for (const auto& e : j) out.emplace_back(key_from_json(e), i64_from_json(e.at("value")));
  return out;
}

}  // namespace

std::uint64_t u64_from_json(const nlohmann::json& j) {
  if (j.is_string()) return std::stoull(j.get<std::string>());
  return j.get<std::uint64_t>();
}

std::int64_t i64_from_json(const nlohmann::json& j) {
  if (j.is_string()) return std::stoll(j.get<std::string>());
  return j.get<std::int64_t>();
}

nlohmann::ordered_json to_json(const Key& k) {
  nlohmann::ordered_json j;
  j["shard"] = k.shard;
  j["key"] = k.key;
  return j;
}

nlohmann::ordered_json to_json(const BlockId& id) {
  nlohmann::ordered_json j;
  j["author"] = id.author;
  j["round"] = id.round;
  return j;
}

nlohmann::ordered_json to_json(const Outcome& o) {
  nlohmann::ordered_json j;
  j["txid"] = dec(o.txid);
  j["writes_applied"] = kv_list(o.writes_applied);
  j["reads_seen"] = kv_list(o.reads_seen);
  j["aborted"] = o.aborted;
  return j;
}

nlohmann::ordered_json to_json(const Transaction& t) {
  nlohmann::ordered_json j;
  j["txid"] = dec(t.txid);
  j["kind"] = to_string(t.kind);
  auto keys = [](const std::vector<Key>& ks) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& k : ks) a.push_back(to_json(k));
    return a;
  };
  j["reads"] = keys(t.reads);
  j["writes"] = keys(t.writes);
  j["body"] = {{"op", op_name(t.body.op)}, {"arg", dec(t.body.arg)}};
  j["partner"] = t.partner ? nlohmann::ordered_json(dec(*t.partner)) : nlohmann::ordered_json(nullptr);
  if (t.condition) {
    nlohmann::ordered_json c;
    c["pred"] = dec(t.condition->pred);
    c["expected"] = to_json(t.condition->expected);
    j["condition"] = std::move(c);
  } else {
    j["condition"] = nullptr;
  }
  return j;
}

nlohmann::ordered_json to_json(const Block& b) {
  nlohmann::ordered_json j;
  j["author"] = b.id.author;
  j["round"] = b.id.round;
  j["shard"] = b.shard;
  auto ps = nlohmann::ordered_json::array();
  for (const auto& p : b.parents) ps.push_back(to_json(p));
  j["parents"] = std::move(ps);
  auto txs = nlohmann::ordered_json::array();
  for (const auto& t : b.txs) txs.push_back(to_json(t));
  j["txs"] = std::move(txs);
  return j;
}

Key key_from_json(const nlohmann::json& j) {
  return Key{j.at("shard").get<std::uint32_t>(), j.at("key").get<std::uint32_t>()};
}

BlockId block_id_from_json(const nlohmann::json& j) {
  return BlockId{j.at("author").get<NodeId>(), j.at("round").get<Round>()};
}

Outcome outcome_from_json(const nlohmann::json& j) {
  Outcome o;
  o.txid = u64_from_json(j.at("txid"));
  o.writes_applied = kv_from(j.at("writes_applied"));
  o.reads_seen = kv_from(j.at("reads_seen"));
  o.aborted = j.at("aborted").get<bool>();
  return o;
}

Transaction transaction_from_json(const nlohmann::json& j) {
  Transaction t;
  t.txid = u64_from_json(j.at("txid"));
  t.kind = tx_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& k : j.at("reads")) t.reads.push_back(key_from_json(k));
  for (const auto& k : j.at("writes")) t.writes.push_back(key_from_json(k));
  t.body.op = op_from(j.at("body").at("op").get<std::string>());
  t.body.arg = i64_from_json(j.at("body").at("arg"));
  if (j.contains("partner") && !j.at("partner").is_null()) t.partner = u64_from_json(j.at("partner"));
  if (j.contains("condition") && !j.at("condition").is_null()) {
    const auto& c = j.at("condition");
    t.condition = Condition{u64_from_json(c.at("pred")), outcome_from_json(c.at("expected"))};
  }
  return t;
}

Block block_from_json(const nlohmann::json& j) {
  Block b;
  b.id = BlockId{j.at("author").get<NodeId>(), j.at("round").get<Round>()};
  b.shard = j.at("shard").get<std::uint32_t>();
  for (const auto& p : j.at("parents")) b.parents.push_back(block_id_from_json(p));
  for (const auto& t : j.at("txs")) b.txs.push_back(transaction_from_json(t));
  return b;
}

}  // namespace lemonshark
