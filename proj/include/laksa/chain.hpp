// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "laksa/codec.hpp"
#include "laksa/types.hpp"

namespace laksa {

struct UnknownBlockError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

enum class InsertResult { inserted, duplicate, unknown_parent, bad_structure };

struct ChainHead {
  Digest last_block{};
  Stake stake = 0;
  // True when the strongest continuation of last_block is the implicit
  // virtual branch formed by pending votes (no materialized block yet).
  bool pending_virtual_tip = false;
};

// Fork-aware tree of standard and virtual blocks with cached per-subtree
// stake. Votes count in the subtree of the node that contains them; votes
// not yet contained in any block ("pending") attach at the standard block
// they name and compete as an implicit virtual branch during selection.
// A (voter, round, target) vote is counted at most once per root-to-leaf
// path: rounds increase strictly along any path, so an in-block vote can
// never meet a same-round duplicate on its own path, and pending copies are
// dropped as soon as any inserted block contains the vote. Cross-branch
// duplicates (equivocation) are deliberately allowed to count on each
// branch.
class BlockTree {
 public:
  enum class Kind { genesis, standard, virtual_block };

  struct Node {
    Kind kind = Kind::genesis;
    Round round = 0;
    Digest parent{};
    Stake own_stake = 0;      // vote stake contained in this node
    Stake pending_stake = 0;  // pending votes naming this node, all rounds
    Stake subtree = 0;        // own + descendants + pending in subtree
    std::vector<Digest> children;
    std::optional<Block> block;
    std::optional<VirtualBlock> vblock;
  };

  explicit BlockTree(const Digest& genesis_digest, Round genesis_round = 0)
      : genesis_(genesis_digest) {
    Node g;
    g.kind = Kind::genesis;
    g.round = genesis_round;
    g.parent = genesis_digest;
    nodes_.emplace(genesis_digest, std::move(g));
  }

  const Digest& genesis() const { return genesis_; }
  bool contains(const Digest& d) const { return nodes_.count(d) > 0; }
  std::size_t size() const { return nodes_.size(); }

  Round round_of(const Digest& d) const { return node(d).round; }
  Digest parent_of(const Digest& d) const { return node(d).parent; }
  Kind kind_of(const Digest& d) const { return node(d).kind; }
  bool is_standard(const Digest& d) const { return node(d).kind != Kind::virtual_block; }
  Stake own_stake_of(const Digest& d) const { return node(d).own_stake; }
  Stake pending_stake_on(const Digest& d) const { return node(d).pending_stake; }
  const std::vector<Digest>& children_of(const Digest& d) const { return node(d).children; }
  const Block* block(const Digest& d) const {
    const Node& n = node(d);
    return n.block ? &*n.block : nullptr;
  }
  const VirtualBlock* virtual_block(const Digest& d) const {
    const Node& n = node(d);
    return n.vblock ? &*n.vblock : nullptr;
  }

  InsertResult insert_block(const Block& b) {
    Digest d = digest_of(b);
    if (nodes_.count(d)) return InsertResult::duplicate;
    auto pit = nodes_.find(b.parent_hash);
    if (pit == nodes_.end()) return InsertResult::unknown_parent;
    if (b.round <= pit->second.round) return InsertResult::bad_structure;
    for (const Vote& v : b.votes)
      if (v.round != b.round) return InsertResult::bad_structure;
    Node n;
    n.kind = Kind::standard;
    n.round = b.round;
    n.parent = b.parent_hash;
    n.own_stake = deduped_stake(b.votes);
    n.subtree = n.own_stake;
    n.block = b;
    link(d, std::move(n));
    for (const Digest& f : b.forks) reported_.insert(f);
    absorb_included(b.votes);
    return InsertResult::inserted;
  }

  InsertResult insert_virtual(const VirtualBlock& vb) {
    if (vb.votes.empty()) return InsertResult::bad_structure;
    Digest d = digest_of(vb);
    if (nodes_.count(d)) return InsertResult::duplicate;
    auto pit = nodes_.find(vb.parent_hash);
    if (pit == nodes_.end()) return InsertResult::unknown_parent;
    if (vb.round <= pit->second.round) return InsertResult::bad_structure;
    for (const Vote& v : vb.votes)
      if (v.round != vb.round) return InsertResult::bad_structure;
    Node n;
    n.kind = Kind::virtual_block;
    n.round = vb.round;
    n.parent = vb.parent_hash;
    n.own_stake = deduped_stake(vb.votes);
    n.subtree = n.own_stake;
    VirtualBlock canonical = vb;
    canonicalize_votes(canonical.votes);
    n.vblock = std::move(canonical);
    link(d, std::move(n));
    absorb_included(vb.votes);
    return InsertResult::inserted;
  }

  // Adds a received-but-not-included vote. `includable` marks votes this
  // observer may later collate into blocks (votes that arrived on time).
  // Returns false for duplicates, votes already included somewhere in the
  // tree, unknown or virtual targets, and non-increasing rounds.
  bool add_pending_vote(const Vote& v, bool includable = true) {
    auto it = nodes_.find(v.parent_hash);
    if (it == nodes_.end()) return false;
    if (it->second.kind == Kind::virtual_block) return false;
    if (v.round <= it->second.round) return false;
    if (included_.count(vote_key(v))) return false;
    PendingBucket& bucket = pending_[{v.round, v.parent_hash}];
    for (const PendingVote& pv : bucket.votes)
      if (pv.vote.voter == v.voter) return false;
    bucket.votes.push_back({v, includable});
    bucket.stake += v.stake;
    it->second.pending_stake += v.stake;
    propagate(v.parent_hash, v.stake);
    return true;
  }

  // Total vote stake supporting d's subtree: votes contained in d and its
  // descendants plus pending votes naming blocks in the subtree.
  Stake tree_stake(const Digest& d) const { return node(d).subtree; }

  // Brute-force recount from payloads, for cross-checking the cached totals.
  Stake tree_stake_slow(const Digest& d) const {
    const Node& n = node(d);
    Stake total = n.kind == Kind::genesis ? 0
                  : n.kind == Kind::standard ? deduped_stake(n.block->votes)
                                             : deduped_stake(n.vblock->votes);
    for (auto& [key, bucket] : pending_)
      if (key.second == d)
        for (const PendingVote& pv : bucket.votes) total += pv.vote.stake;
    for (const Digest& c : n.children) total += tree_stake_slow(c);
    return total;
  }

  // Ties between equal-stake subtrees: the block whose
  // hash(beacon || last leader pk) is numerically smaller wins; virtual
  // blocks and genesis, having no leader, use their own digest in place of
  // the leader key.
  Digest break_tie(const Digest& a, const Digest& b, const Randomness& beacon) const {
    if (a == b) return a;
    Bytes32 ka = tie_key(a, beacon);
    Bytes32 kb = tie_key(b, beacon);
    if (ka != kb) return ka < kb ? a : b;
    return a < b ? a : b;
  }

  // Most-stake walk from genesis: descend into the child with maximal
  // subtree stake until a leaf. The pending votes naming the current block
  // form an implicit virtual branch that can outweigh every real child, in
  // which case the walk ends there with pending_virtual_tip set.
  ChainHead main_chain(const std::function<Randomness(const Digest&)>& tie_beacon) const {
    Digest cur = genesis_;
    while (true) {
      const Node& n = node(cur);
      if (n.children.empty() && n.pending_stake == 0)
        return {cur, n.subtree, false};
      bool have_child = false;
      Digest best{};
      Stake best_stake = 0;
      Randomness beacon{};
      bool beacon_ready = false;
      for (const Digest& c : n.children) {
        Stake s = node(c).subtree;
        if (!have_child || s > best_stake) {
          best = c;
          best_stake = s;
          have_child = true;
        } else if (s == best_stake) {
          if (!beacon_ready) {
            beacon = tie_beacon(cur);
            beacon_ready = true;
          }
          best = break_tie(best, c, beacon);
        }
      }
      if (!have_child || n.pending_stake > best_stake)
        return {cur, n.subtree, true};
      cur = best;
    }
  }

  ChainHead main_chain(const Randomness& beacon) const {
    return main_chain([&beacon](const Digest&) { return beacon; });
  }

  // One virtual block per stale round of pending votes naming the head's
  // latest standard ancestor, chained in round order from the head; the last
  // one is the predecessor for a newly proposed standard block. Only
  // includable (on-time) votes are collated. Nothing is inserted here.
  std::vector<VirtualBlock> build_virtual_blocks(
      Round up_to_round, const std::function<Randomness(const Digest&)>& tie_beacon) const {
    ChainHead head = main_chain(tie_beacon);
    Digest target = latest_standard_ancestor(head.last_block);
    Round from = node(head.last_block).round;
    std::vector<VirtualBlock> out;
    Digest parent = head.last_block;
    for (auto& [key, bucket] : pending_) {
      if (!(key.second == target)) continue;
      if (key.first <= from || key.first > up_to_round) continue;
      std::vector<Vote> votes;
      for (const PendingVote& pv : bucket.votes)
        if (pv.includable) votes.push_back(pv.vote);
      if (votes.empty()) continue;
      VirtualBlock vb = make_virtual_block(key.first, parent, std::move(votes));
      parent = digest_of(vb);
      out.push_back(std::move(vb));
    }
    return out;
  }

  std::vector<VirtualBlock> build_virtual_blocks(Round up_to_round,
                                                 const Randomness& beacon) const {
    return build_virtual_blocks(up_to_round,
                                [&beacon](const Digest&) { return beacon; });
  }

  Digest latest_standard_ancestor(const Digest& d) const {
    Digest cur = d;
    while (node(cur).kind == Kind::virtual_block) cur = node(cur).parent;
    return cur;
  }

  std::vector<Digest> path_from_genesis(const Digest& d) const {
    std::vector<Digest> path;
    Digest cur = d;
    while (true) {
      path.push_back(cur);
      if (cur == genesis_) break;
      cur = node(cur).parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  bool is_ancestor(const Digest& anc, const Digest& d) const {
    Digest cur = d;
    while (true) {
      if (cur == anc) return true;
      if (cur == genesis_) return false;
      cur = node(cur).parent;
    }
  }

  // Stake of the chain ending at d: votes contained in blocks on the
  // root-to-d path.
  Stake chain_stake(const Digest& d) const {
    Stake total = 0;
    Digest cur = d;
    while (true) {
      total += node(cur).own_stake;
      if (cur == genesis_) break;
      cur = node(cur).parent;
    }
    return total;
  }

  // Fork blocks known to this tree that are neither on the head's chain nor
  // already listed in any inserted block's fork references.
  std::vector<Digest> unreported_forks(const Digest& head) const {
    std::set<Digest> on_path;
    for (const Digest& d : path_from_genesis(head)) on_path.insert(d);
    std::vector<std::pair<std::pair<Round, Digest>, Digest>> found;
    for (const auto& [d, n] : nodes_) {
      if (on_path.count(d) || reported_.count(d)) continue;
      found.push_back({{n.round, d}, d});
    }
    std::sort(found.begin(), found.end());
    std::vector<Digest> out;
    out.reserve(found.size());
    for (auto& f : found) out.push_back(f.second);
    return out;
  }

  std::vector<Vote> includable_pending(Round round, const Digest& target) const {
    std::vector<Vote> out;
    auto it = pending_.find({round, target});
    if (it == pending_.end()) return out;
    for (const PendingVote& pv : it->second.votes)
      if (pv.includable) out.push_back(pv.vote);
    return out;
  }

  Stake pending_total() const {
    Stake s = 0;
    for (auto& [key, bucket] : pending_) s += bucket.stake;
    return s;
  }

  void for_each_node(const std::function<void(const Digest&, const Node&)>& fn) const {
    for (const auto& [d, n] : nodes_) fn(d, n);
  }

  // Line-oriented text dump: digest, parent, round, kind, direct stake,
  // subtree stake; sorted by (round, digest).
  std::string dump() const {
    std::vector<std::pair<std::pair<Round, std::string>, std::string>> lines;
    for (const auto& [d, n] : nodes_) {
      const char* kind = n.kind == Kind::genesis    ? "genesis"
                         : n.kind == Kind::standard ? "standard"
                                                    : "virtual";
      std::ostringstream os;
      os << to_hex({d.data(), d.size()}) << ' ' << to_hex({n.parent.data(), n.parent.size()})
         << ' ' << n.round << ' ' << kind << ' ' << n.own_stake << ' ' << n.subtree;
      lines.push_back({{n.round, to_hex({d.data(), d.size()})}, os.str()});
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (auto& l : lines) {
      out += l.second;
      out += '\n';
    }
    return out;
  }

 private:
  struct PendingVote {
    Vote vote;
    bool includable;
  };
  struct PendingBucket {
    std::vector<PendingVote> votes;
    Stake stake = 0;
  };

  using VoteKey = std::tuple<Round, NodeId, Digest>;  // (round, voter, target)

  static VoteKey vote_key(const Vote& v) { return {v.round, v.voter, v.parent_hash}; }

  static Stake deduped_stake(const std::vector<Vote>& votes) {
    Stake s = 0;
    std::set<NodeId> seen;
    for (const Vote& v : votes)
      if (seen.insert(v.voter).second) s += v.stake;
    return s;
  }

  const Node& node(const Digest& d) const {
    auto it = nodes_.find(d);
    if (it == nodes_.end()) throw UnknownBlockError("unknown block " + short_hex(d));
    return it->second;
  }

  Node& node(const Digest& d) {
    auto it = nodes_.find(d);
    if (it == nodes_.end()) throw UnknownBlockError("unknown block " + short_hex(d));
    return it->second;
  }

  Bytes32 tie_key(const Digest& d, const Randomness& beacon) const {
    const Node& n = node(d);
    Sha256 h;
    h.update(beacon);
    if (n.kind == Kind::standard)
      h.update(n.block->leader.id);
    else
      h.update(d);
    return h.finalize();
  }

  void link(const Digest& d, Node&& n) {
    Digest parent = n.parent;
    Stake stake = n.subtree;
    nodes_.emplace(d, std::move(n));
    auto& siblings = nodes_.at(parent).children;
    siblings.insert(std::upper_bound(siblings.begin(), siblings.end(), d), d);
    propagate(parent, stake);
  }

  // Mark votes as included and drop any pending copies.
  void absorb_included(const std::vector<Vote>& votes) {
    for (const Vote& v : votes) {
      included_.insert(vote_key(v));
      auto it = pending_.find({v.round, v.parent_hash});
      if (it == pending_.end()) continue;
      auto& bucket = it->second;
      for (std::size_t i = 0; i < bucket.votes.size(); ++i) {
        if (bucket.votes[i].vote.voter == v.voter) {
          Stake s = bucket.votes[i].vote.stake;
          bucket.votes.erase(bucket.votes.begin() + static_cast<std::ptrdiff_t>(i));
          bucket.stake -= s;
          node(v.parent_hash).pending_stake -= s;
          propagate(v.parent_hash, -s);
          break;
        }
      }
      if (bucket.votes.empty()) pending_.erase(it);
    }
  }

  void propagate(const Digest& from, Stake delta) {
    if (delta == 0) return;
    Digest cur = from;
    while (true) {
      Node& n = node(cur);
      n.subtree += delta;
      if (cur == genesis_) break;
      cur = n.parent;
    }
  }

  Digest genesis_;
  std::unordered_map<Digest, Node, Bytes32Hash> nodes_;
  std::map<std::pair<Round, Digest>, PendingBucket> pending_;
  std::set<VoteKey> included_;
  std::set<Digest> reported_;
};

}  // namespace laksa
