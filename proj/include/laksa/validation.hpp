// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "laksa/chain.hpp"
#include "laksa/codec.hpp"
#include "laksa/sampling.hpp"
#include "laksa/types.hpp"

namespace laksa {

enum class Verdict {
  accept,
  future_round,
  unknown_parent,
  not_elected,
  stake_mismatch,
  bad_signature,
  leader_not_elected,
  vote_round_mismatch,
  duplicate_voter,
  unknown_fork_ref,
  bad_structure,
};

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::future_round: return "future-round";
    case Verdict::unknown_parent: return "unknown-parent";
    case Verdict::not_elected: return "not-elected";
    case Verdict::stake_mismatch: return "stake-mismatch";
    case Verdict::bad_signature: return "bad-signature";
    case Verdict::leader_not_elected: return "leader-not-elected";
    case Verdict::vote_round_mismatch: return "vote-round-mismatch";
    case Verdict::duplicate_voter: return "duplicate-voter";
    case Verdict::unknown_fork_ref: return "unknown-fork-ref";
    case Verdict::bad_structure: return "bad-structure";
  }
  return "?";
}

struct ValidationResult {
  Verdict verdict = Verdict::accept;
  std::string detail;

  bool ok() const { return verdict == Verdict::accept; }
  static ValidationResult pass() { return {}; }
  static ValidationResult fail(Verdict v, std::string d = {}) { return {v, std::move(d)}; }
};

struct ValidationContext {
  Round current_round = 0;
  const StakeDistribution* dist = nullptr;
  ElectionParams params;
  const SignatureScheme* scheme = nullptr;
  // Beacon for electing round r on the chain ending at the given parent.
  std::function<Randomness(Round r, const Digest& parent)> beacon_for;
  // Optional sampler override (e.g. a memoized election); must agree with
  // elected_stake over beacon_for.
  std::function<Stake(const NodeId&, Round, const Digest& parent, Role)> elected_override;

  Stake elected(const NodeId& pk, Round r, const Digest& parent, Role role) const {
    if (elected_override) return elected_override(pk, r, parent, role);
    return elected_stake(pk, beacon_for(r, parent), role, *dist, params);
  }
};

// A vote is accepted iff it is authentic, not from the future, names a known
// block, and carries exactly the stake the sampler elected its voter with.
inline ValidationResult validate_vote(const Vote& v, const ValidationContext& ctx,
                                      const BlockTree& tree) {
  if (!verify_vote_signature(*ctx.scheme, v))
    return ValidationResult::fail(Verdict::bad_signature);
  if (v.round > ctx.current_round)
    return ValidationResult::fail(Verdict::future_round,
                                  "vote round " + std::to_string(v.round));
  if (!tree.contains(v.parent_hash))
    return ValidationResult::fail(Verdict::unknown_parent, short_hex(v.parent_hash));
  Stake s = ctx.elected(v.voter, v.round, v.parent_hash, Role::vote);
  if (s <= 0) return ValidationResult::fail(Verdict::not_elected);
  if (v.stake != s)
    return ValidationResult::fail(Verdict::stake_mismatch,
                                  "claimed " + std::to_string(v.stake) + " sampled " +
                                      std::to_string(s));
  return ValidationResult::pass();
}

// Block checks: authentic, not from the future, known parent, resolvable
// fork references, every vote individually valid and consistent with the
// block (same round, naming the parent chain's latest standard block), no
// duplicated voter, and a leader the sampler actually elected.
inline ValidationResult validate_block(const Block& b, const ValidationContext& ctx,
                                       const BlockTree& tree) {
  if (!verify_block_signature(*ctx.scheme, b))
    return ValidationResult::fail(Verdict::bad_signature);
  if (b.round > ctx.current_round)
    return ValidationResult::fail(Verdict::future_round,
                                  "block round " + std::to_string(b.round));
  if (!tree.contains(b.parent_hash))
    return ValidationResult::fail(Verdict::unknown_parent, short_hex(b.parent_hash));
  if (b.round <= tree.round_of(b.parent_hash))
    return ValidationResult::fail(Verdict::bad_structure, "round not increasing");
  for (const Digest& f : b.forks)
    if (!tree.contains(f))
      return ValidationResult::fail(Verdict::unknown_fork_ref, short_hex(f));
  // Votes in a block support the parent chain: they name the parent itself
  // or, when the parent is virtual, its latest standard ancestor.
  Digest standard_parent = tree.latest_standard_ancestor(b.parent_hash);
  std::set<NodeId> seen;
  for (const Vote& v : b.votes) {
    if (v.round != b.round)
      return ValidationResult::fail(Verdict::vote_round_mismatch,
                                    "vote round " + std::to_string(v.round));
    if (!(v.parent_hash == b.parent_hash) && !(v.parent_hash == standard_parent))
      return ValidationResult::fail(Verdict::vote_round_mismatch,
                                    "vote supports a different parent");
    if (!seen.insert(v.voter).second)
      return ValidationResult::fail(Verdict::duplicate_voter, v.voter.hex().substr(0, 16));
    ValidationResult r = validate_vote(v, ctx, tree);
    if (!r.ok()) return r;
  }
  Stake ls = ctx.elected(b.leader, b.round, b.parent_hash, Role::lead);
  if (ls <= 0) return ValidationResult::fail(Verdict::leader_not_elected);
  return ValidationResult::pass();
}

struct SignerMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Two provable misbehaviors by one identity: conflicting votes/blocks within
// one round, and supporting a chain strictly weaker than one supported
// earlier. Chain stake is the vote stake contained in blocks on the
// root-to-target path. Returns nothing when the messages are identical,
// target chains cannot be resolved, or no rule fires.
inline std::optional<EquivocationEvidence> detect_equivocation(const SignedMessage& m1,
                                                               const SignedMessage& m2,
                                                               const BlockTree& tree) {
  NodeId s1 = message_signer(m1);
  NodeId s2 = message_signer(m2);
  if (!(s1 == s2)) throw SignerMismatchError("messages signed by different identities");
  if (m1 == m2) return std::nullopt;
  const SignedMessage& early = message_round(m1) <= message_round(m2) ? m1 : m2;
  const SignedMessage& late = message_round(m1) <= message_round(m2) ? m2 : m1;
  Digest t1 = message_target(early);
  Digest t2 = message_target(late);
  if (message_round(early) == message_round(late)) {
    if (t1 == t2) return std::nullopt;
    return EquivocationEvidence{EquivocationEvidence::Kind::same_round_conflict, early, late,
                                s1};
  }
  if (!tree.contains(t1) || !tree.contains(t2)) return std::nullopt;
  if (tree.chain_stake(t1) > tree.chain_stake(t2))
    return EquivocationEvidence{EquivocationEvidence::Kind::weaker_chain_support, early, late,
                                s1};
  return std::nullopt;
}

}  // namespace laksa
