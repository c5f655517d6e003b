// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "laksa/bytes.hpp"
#include "laksa/sha256.hpp"

namespace laksa {

using Stake = std::int64_t;
using Round = std::int64_t;
using Digest = Bytes32;
using Randomness = Bytes32;
using SignatureToken = Bytes32;

// Opaque 32-byte identity token standing in for a public key. Totally
// ordered so that sampling and tie-breaking are deterministic.
struct NodeId {
  Bytes32 id{};

  auto operator<=>(const NodeId&) const = default;

  static NodeId from_index(std::uint64_t i) {
    Sha256 h;
    h.update("laksa-node");
    h.update_u64(i);
    return NodeId{h.finalize()};
  }

  std::string hex() const { return to_hex({id.data(), id.size()}); }
};

struct NodeIdHash {
  std::size_t operator()(const NodeId& n) const noexcept { return Bytes32Hash{}(n.id); }
};

// Immutable mapping NodeId -> positive stake units; entries are kept in
// ascending NodeId order, which is the canonical order for unit expansion.
class StakeDistribution {
 public:
  StakeDistribution() = default;

  static StakeDistribution from_entries(std::vector<std::pair<NodeId, Stake>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    StakeDistribution d;
    d.entries_ = std::move(entries);
    for (std::size_t i = 0; i < d.entries_.size(); ++i) {
      if (d.entries_[i].second <= 0)
        throw std::invalid_argument("stake entries must be positive");
      if (i > 0 && d.entries_[i].first == d.entries_[i - 1].first)
        throw std::invalid_argument("duplicate node id in stake distribution");
      d.total_ += d.entries_[i].second;
    }
    return d;
  }

  Stake total() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<NodeId, Stake>>& entries() const { return entries_; }

  Stake stake_of(const NodeId& n) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), n,
                               [](const auto& e, const NodeId& v) { return e.first < v; });
    if (it == entries_.end() || !(it->first == n)) return 0;
    return it->second;
  }

  // Index of the entry for n, or size() when absent.
  std::size_t index_of(const NodeId& n) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), n,
                               [](const auto& e, const NodeId& v) { return e.first < v; });
    if (it == entries_.end() || !(it->first == n)) return entries_.size();
    return static_cast<std::size_t>(it - entries_.begin());
  }

 private:
  std::vector<std::pair<NodeId, Stake>> entries_;
  Stake total_ = 0;
};

struct Vote {
  Round round = 0;
  Digest parent_hash{};
  Stake stake = 0;
  NodeId voter{};
  SignatureToken sig{};

  bool operator==(const Vote&) const = default;
};

struct Block {
  Round round = 0;
  Randomness rand{};
  Digest parent_hash{};
  std::vector<Digest> forks;
  std::vector<Vote> votes;
  std::vector<std::uint8_t> txs;
  NodeId leader{};
  SignatureToken sig{};

  bool operator==(const Block&) const = default;
};

// Leaderless aggregate of votes that were not included in any standard
// block. Carries no randomness, transactions, or signature; its identity is
// the digest of (round, parent_hash, canonical vote list).
struct VirtualBlock {
  Round round = 0;
  Digest parent_hash{};
  std::vector<Vote> votes;

  bool operator==(const VirtualBlock&) const = default;
};

// Canonical vote order inside a virtual block: (voter id, stake).
inline void canonicalize_votes(std::vector<Vote>& votes) {
  std::sort(votes.begin(), votes.end(), [](const Vote& a, const Vote& b) {
    if (a.voter != b.voter) return a.voter < b.voter;
    return a.stake < b.stake;
  });
}

using SignedMessage = std::variant<Vote, Block>;

inline Round message_round(const SignedMessage& m) {
  return std::visit([](const auto& v) { return v.round; }, m);
}

inline NodeId message_signer(const SignedMessage& m) {
  if (const Vote* v = std::get_if<Vote>(&m)) return v->voter;
  return std::get<Block>(m).leader;
}

// The chain a message supports (vote) or extends (block).
inline Digest message_target(const SignedMessage& m) {
  return std::visit([](const auto& v) { return v.parent_hash; }, m);
}

struct EquivocationEvidence {
  enum class Kind { same_round_conflict, weaker_chain_support };
  Kind kind;
  SignedMessage msg_a;
  SignedMessage msg_b;
  NodeId offender;
};

// Pluggable signing. The default scheme derives a deterministic token from
// (signer id, message digest); a token verifies iff it is recomputable.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual SignatureToken sign(const NodeId& signer,
                              std::span<const std::uint8_t> msg) const = 0;
  virtual bool verify(const NodeId& signer, std::span<const std::uint8_t> msg,
                      const SignatureToken& sig) const = 0;
};

class TokenSignatureScheme final : public SignatureScheme {
 public:
  SignatureToken sign(const NodeId& signer,
                      std::span<const std::uint8_t> msg) const override {
    Sha256 h;
    h.update("laksa-sig");
    h.update(signer.id);
    h.update(Sha256::digest(msg));
    return h.finalize();
  }

  bool verify(const NodeId& signer, std::span<const std::uint8_t> msg,
              const SignatureToken& sig) const override {
    return sign(signer, msg) == sig;
  }
};

}  // namespace laksa
