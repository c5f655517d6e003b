// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "laksa/beacon.hpp"
#include "laksa/chain.hpp"
#include "laksa/prob.hpp"
#include "laksa/sampling.hpp"
#include "laksa/validation.hpp"

namespace laksa {

inline Digest genesis_digest(const Randomness& genesis_seed) {
  Sha256 h;
  h.update("laksa-genesis");
  h.update(genesis_seed);
  return h.finalize();
}

struct RewardParams {
  double r_lead = 50.0;  // leader reward R_l
  double r_vote = 2.0;   // per-stake-unit voter reward R_v
  double r_incl = 1.0;   // per-stake-unit inclusion reward R_i

  // recommended regime R_l >> R_v > R_i, checked as a strict ordering
  bool valid() const { return r_lead > r_vote && r_vote > r_incl && r_incl >= 0.0; }
};

// Per-observer commitment state for the sequential test.
struct CommitState {
  double p_star = 1e-6;
  double gamma = 0.99;
  std::optional<double> finality_threshold;  // long-range defense when set
  Round last_commit = 0;
  std::map<Digest, std::int64_t> trial_counts;
  std::vector<Digest> committed;  // ascending rounds, a path from genesis
  std::size_t finalized_count = 0;
  bool out_of_sync = false;  // finalized prefix left the main chain
};

struct ProtocolConfig {
  const StakeDistribution* dist = nullptr;
  ElectionParams election;
  BeaconParams beacon;
  bool use_global_beacon = false;
  const SignatureScheme* scheme = nullptr;
  double alpha_assumed = 0.0;      // adversary fraction for the null hypothesis
  double max_exact_cost = 5e7;
  RewardParams rewards;
};

// Beacon for electing round r on the chain ending at `parent`.
inline Randomness election_beacon(const BlockTree& tree, const Digest& parent, Round r,
                                  const ProtocolConfig& cfg) {
  if (cfg.use_global_beacon) return global_beacon(cfg.beacon.genesis_seed, r);
  return round_beacon(tree, parent, r, cfg.beacon);
}

struct NodeState {
  NodeId id;
  BlockTree tree;
  CommitState commit_state;

  NodeState(NodeId node, const Digest& genesis, Round genesis_round = 0)
      : id(node), tree(genesis, genesis_round) {}
};

inline std::function<Randomness(const Digest&)> tie_beacon_provider(
    const BlockTree& tree, Round r, const ProtocolConfig& cfg) {
  return [&tree, r, &cfg](const Digest& parent) {
    return election_beacon(tree, parent, r, cfg);
  };
}

// Step 1 of a round: an elected voter emits one vote for the latest standard
// block of its main chain (virtual descendants are implied) and records it
// locally. Non-elected nodes emit nothing.
inline std::optional<Vote> vote_step(NodeState& state, Round round,
                                     const ProtocolConfig& cfg) {
  ChainHead head = state.tree.main_chain(tie_beacon_provider(state.tree, round, cfg));
  Digest target = state.tree.latest_standard_ancestor(head.last_block);
  Randomness beacon = election_beacon(state.tree, target, round, cfg);
  Stake s = elected_stake(state.id, beacon, Role::vote, *cfg.dist, cfg.election);
  if (s <= 0) return std::nullopt;
  Vote v = make_vote(*cfg.scheme, state.id, round, target, s);
  state.tree.add_pending_vote(v, true);
  return v;
}

struct LeaderOutput {
  std::vector<VirtualBlock> virtuals;  // broadcast before the block
  std::optional<Block> block;
};

// Step 2: an elected leader first materializes virtual blocks for stale
// rounds of pending votes, then proposes a standard block on top of the
// latest one carrying this round's collected votes, a fresh random value,
// and references to not-yet-reported forks. `vote_filter`, when set, limits
// which collected votes enter the block (used for censorship modelling).
inline LeaderOutput leader_step(NodeState& state, Round round, const Randomness& block_rand,
                                const ProtocolConfig& cfg,
                                const std::function<bool(const Vote&)>& vote_filter = {}) {
  LeaderOutput out;
  auto ties = tie_beacon_provider(state.tree, round, cfg);
  ChainHead head = state.tree.main_chain(ties);
  Digest target = state.tree.latest_standard_ancestor(head.last_block);
  Randomness beacon = election_beacon(state.tree, target, round, cfg);
  Stake ls = elected_stake(state.id, beacon, Role::lead, *cfg.dist, cfg.election);
  if (ls <= 0) return out;
  out.virtuals = state.tree.build_virtual_blocks(round - 1, ties);
  Digest parent = head.last_block;
  for (const VirtualBlock& vb : out.virtuals) {
    state.tree.insert_virtual(vb);
    parent = digest_of(vb);
  }
  std::vector<Vote> votes = state.tree.includable_pending(round, target);
  if (vote_filter) {
    std::vector<Vote> kept;
    for (const Vote& v : votes)
      if (vote_filter(v)) kept.push_back(v);
    votes = std::move(kept);
  }
  std::vector<Digest> forks = state.tree.unreported_forks(parent);
  Block b = make_block(*cfg.scheme, state.id, round, block_rand, parent, std::move(forks),
                       std::move(votes));
  state.tree.insert_block(b);
  out.block = std::move(b);
  return out;
}

struct OutboundBundle {
  std::optional<Vote> vote;
  std::vector<VirtualBlock> virtuals;
  std::optional<Block> block;
};

// Both steps of the voting round for one node against its current view.
inline OutboundBundle voting_step(NodeState& state, Round round, const Randomness& block_rand,
                                  const ProtocolConfig& cfg) {
  OutboundBundle out;
  out.vote = vote_step(state, round, cfg);
  LeaderOutput lead = leader_step(state, round, block_rand, cfg);
  out.virtuals = std::move(lead.virtuals);
  out.block = std::move(lead.block);
  return out;
}

// Shared memo for p-values; only meaningful while (n, u, q, mode) are fixed,
// which holds within one simulation run.
struct PValueCache {
  std::map<std::pair<std::int64_t, std::int64_t>, double> log_values;  // (k, t)
};

// Walks the main chain upward from the last committed block and keeps
// committing standard blocks while the sequential test passes; stops at the
// first rejection (in-order commitment). For a block from round j tested at
// round m the test spans k = m - j + 1 committees, and each block's trial
// counter advances once per scan that reaches it. Returns the new commit
// height. A committed block that falls off the main chain is retracted
// (the replacing subtree is strictly stronger) unless it was finalized, in
// which case the observer marks itself out of sync and refuses to follow.
inline Round commit_scan(NodeState& state, Round current_round, const ProtocolConfig& cfg,
                         PValueCache* cache = nullptr) {
  CommitState& cs = state.commit_state;
  ChainHead head =
      state.tree.main_chain(tie_beacon_provider(state.tree, current_round, cfg));
  std::vector<Digest> path = state.tree.path_from_genesis(head.last_block);
  std::set<Digest> on_path(path.begin(), path.end());
  std::size_t keep = 0;
  while (keep < cs.committed.size() && on_path.count(cs.committed[keep])) ++keep;
  if (keep < cs.committed.size()) {
    if (keep < cs.finalized_count) {
      cs.out_of_sync = true;
      return cs.last_commit;
    }
    cs.committed.resize(keep);
    cs.last_commit =
        keep == 0 ? state.tree.round_of(state.tree.genesis())
                  : state.tree.round_of(cs.committed[keep - 1]);
  }
  cs.out_of_sync = false;

  const std::int64_t n = cfg.dist->total();
  prob::TestParams tp;
  tp.n = n;
  tp.alpha = cfg.alpha_assumed;
  tp.q = cfg.election.q;
  tp.p_star = cs.p_star;
  tp.gamma = cs.gamma;
  tp.max_exact_cost = cfg.max_exact_cost;
  const std::int64_t u = tp.worst_case_u();

  for (const Digest& d : path) {
    if (!state.tree.is_standard(d)) continue;  // commitment targets standard blocks only
    Round j = state.tree.round_of(d);
    if (j <= cs.last_commit || d == state.tree.genesis()) continue;
    std::int64_t k = current_round - j + 1;
    if (k < 1) break;
    Stake t = state.tree.tree_stake(d);
    std::int64_t trial = ++cs.trial_counts[d];
    double log_threshold = prob::sequential_threshold_log(cs.p_star, cs.gamma, trial);
    double log_pv;
    auto key = std::make_pair(k, static_cast<std::int64_t>(t));
    if (cache && cache->log_values.count(key)) {
      log_pv = cache->log_values.at(key);
    } else {
      if (cfg.election.mode == ElectionMode::vrf_binomial) {
        double per_unit = static_cast<double>(u) * static_cast<double>(cfg.election.q) /
                          (static_cast<double>(n) * static_cast<double>(n));
        std::int64_t trials = k * n;
        log_pv = t > trials ? -std::numeric_limits<double>::infinity()
                            : prob::binomial_tail_log(trials, per_unit, t);
      } else {
        log_pv = prob::calculate_pvalue(tp, k, t).log_value;
      }
      if (cache) cache->log_values.emplace(key, log_pv);
    }
    if (log_pv < log_threshold) {
      cs.committed.push_back(d);
      cs.last_commit = j;
      if (cs.finality_threshold && log_pv < std::log(*cs.finality_threshold) &&
          cs.finalized_count == cs.committed.size() - 1)
        cs.finalized_count = cs.committed.size();
    } else {
      break;  // B is rejected; nothing later can commit this scan
    }
  }
  return cs.last_commit;
}

using RewardLedger = std::map<NodeId, double>;

// Rewards for one main-chain block: the leader earns R_l plus R_i per
// included stake unit; every included voter earns R_v per stake unit. Votes
// in a virtual block earn the voter reward once a leader publishes them, but
// carry no inclusion reward for anyone (a censoring leader forfeits it).
inline void apply_rewards(const BlockTree& tree, const Digest& d, const RewardParams& params,
                          RewardLedger& ledger) {
  if (tree.kind_of(d) == BlockTree::Kind::genesis) return;
  if (tree.kind_of(d) == BlockTree::Kind::standard) {
    const Block& b = *tree.block(d);
    ledger[b.leader] += params.r_lead;
    for (const Vote& v : b.votes) {
      ledger[v.voter] += static_cast<double>(v.stake) * params.r_vote;
      ledger[b.leader] += static_cast<double>(v.stake) * params.r_incl;
    }
  } else {
    const VirtualBlock& vb = *tree.virtual_block(d);
    for (const Vote& v : vb.votes)
      ledger[v.voter] += static_cast<double>(v.stake) * params.r_vote;
  }
}

// Expected-reward bounds for an honest node with stake fraction beta over t
// synchronous rounds: t(e_l+e_v) >= R(t) >= ceil(t(1-2a)) (e_l + e_v(1-a))
// with e_v = beta q R_v and e_l = beta (R_l + q R_i).
inline std::pair<double, double> reward_bounds(std::int64_t t_rounds, double alpha,
                                               double beta, Stake q,
                                               const RewardParams& params) {
  if (!(alpha >= 0.0 && alpha < 1.0 / 3.0))
    throw prob::DomainError("reward_bounds: alpha must be in [0, 1/3)");
  double e_v = beta * static_cast<double>(q) * params.r_vote;
  double e_l = beta * (params.r_lead + static_cast<double>(q) * params.r_incl);
  double upper = static_cast<double>(t_rounds) * (e_l + e_v);
  double lower = std::ceil(static_cast<double>(t_rounds) * (1.0 - 2.0 * alpha)) *
                 (e_l + e_v * (1.0 - alpha));
  return {lower, upper};
}

// Coalition-safety characteristics of the reward scheme:
// rho = a e_v / (2 e_l + e_v (2-a)), epsilon <= a e_v / (e_l + e_v (1-a)).
inline std::pair<double, double> coalition_metrics(double alpha_coalition, double e_v,
                                                   double e_l) {
  if (e_v == 0.0) return {0.0, 0.0};
  double rho = alpha_coalition * e_v / (2.0 * e_l + e_v * (2.0 - alpha_coalition));
  double eps = alpha_coalition * e_v / (e_l + e_v * (1.0 - alpha_coalition));
  return {rho, eps};
}

// Finalizing commits pays off when p* < (C1/C2) p1; this returns that bound.
inline double finality_cost_threshold(double attack_cost, double out_of_sync_cost,
                                      double attack_prob_per_block) {
  return attack_cost / out_of_sync_cost * attack_prob_per_block;
}

}  // namespace laksa
