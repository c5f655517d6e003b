// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "laksa/consensus.hpp"

// Deterministic discrete-event simulator: two-step rounds, per-message
// latency models, partitions, offline windows, and the adversary strategies
// used in the experiments. Everything random is derived by hashing the run
// seed with the consumer's coordinates, so a config determines the run
// bit-exactly regardless of processing order.

namespace laksa::sim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AdversaryStrategy { none, equivocate_fork, withhold_votes, censor_votes };

inline const char* strategy_name(AdversaryStrategy s) {
  switch (s) {
    case AdversaryStrategy::none: return "none";
    case AdversaryStrategy::equivocate_fork: return "equivocate-fork";
    case AdversaryStrategy::withhold_votes: return "withhold-votes";
    case AdversaryStrategy::censor_votes: return "censor-votes";
  }
  return "?";
}

enum class LatencyKind { constant, empirical, lognormal };

struct LatencyModel {
  LatencyKind kind = LatencyKind::constant;
  double value = 0.0;                                // constant
  std::vector<std::pair<double, double>> quantiles;  // empirical inverse CDF
  double mu = 0.0, sigma = 1.0;                      // lognormal

  static LatencyModel constant_of(double v) {
    LatencyModel m;
    m.kind = LatencyKind::constant;
    m.value = v;
    return m;
  }

  static LatencyModel lognormal_of(double mu, double sigma) {
    LatencyModel m;
    m.kind = LatencyKind::lognormal;
    m.mu = mu;
    m.sigma = sigma;
    return m;
  }

  static LatencyModel empirical_of(std::vector<std::pair<double, double>> q) {
    LatencyModel m;
    m.kind = LatencyKind::empirical;
    m.quantiles = std::move(q);
    return m;
  }

  // "p,latency" lines, p ascending in [0,1]; '#' comments allowed.
  static LatencyModel from_quantile_csv(std::istream& in) {
    std::vector<std::pair<double, double>> q;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double p, v;
      if (ls >> p >> v) q.push_back({p, v});
    }
    if (q.size() < 2) throw ConfigError("latency table needs at least two quantile rows");
    return empirical_of(std::move(q));
  }

  void validate() const {
    if (kind == LatencyKind::constant && value < 0)
      throw ConfigError("latency.value must be >= 0");
    if (kind == LatencyKind::empirical) {
      if (quantiles.size() < 2) throw ConfigError("latency.quantiles too short");
      for (std::size_t i = 0; i < quantiles.size(); ++i) {
        if (quantiles[i].first < 0 || quantiles[i].first > 1 || quantiles[i].second < 0)
          throw ConfigError("latency.quantiles entries out of range");
        if (i > 0 && quantiles[i].first <= quantiles[i - 1].first)
          throw ConfigError("latency.quantiles must be strictly increasing in p");
      }
    }
    if (kind == LatencyKind::lognormal && sigma < 0)
      throw ConfigError("latency.sigma must be >= 0");
  }

  double sample(double u1, double u2) const {
    switch (kind) {
      case LatencyKind::constant:
        return value;
      case LatencyKind::empirical: {
        double p = u1;
        if (p <= quantiles.front().first) return quantiles.front().second;
        if (p >= quantiles.back().first) return quantiles.back().second;
        for (std::size_t i = 1; i < quantiles.size(); ++i) {
          if (p <= quantiles[i].first) {
            double w = (p - quantiles[i - 1].first) /
                       (quantiles[i].first - quantiles[i - 1].first);
            return quantiles[i - 1].second +
                   w * (quantiles[i].second - quantiles[i - 1].second);
          }
        }
        return quantiles.back().second;
      }
      case LatencyKind::lognormal: {
        double a = u1 <= 0.0 ? 1e-12 : u1;
        double z = std::sqrt(-2.0 * std::log(a)) * std::cos(6.283185307179586 * u2);
        return std::exp(mu + sigma * z);
      }
    }
    return 0.0;
  }

  double median() const {
    switch (kind) {
      case LatencyKind::constant:
        return value;
      case LatencyKind::lognormal:
        return std::exp(mu);
      case LatencyKind::empirical:
        return sample(0.5, 0.5);
    }
    return 0.0;
  }
};

struct OfflineWindow {
  int node = 0;
  Round from = 0;
  Round to = 0;  // inclusive
};

struct PartitionSpec {
  Round from = 0;
  Round to = 0;  // inclusive; messages cross groups only after round `to`
  std::vector<std::vector<int>> groups;
};

struct SimConfig {
  std::uint64_t seed = 1;
  Round rounds = 100;
  std::vector<Stake> stakes;        // node i holds stakes[i] units
  std::vector<int> adversary_nodes;
  ElectionParams election;
  double delta1 = 1.0;  // vote step duration
  double delta2 = 1.0;  // block step duration
  LatencyModel latency;
  double alpha = 0.0;  // adversary fraction assumed by the commitment test
  AdversaryStrategy strategy = AdversaryStrategy::none;
  std::vector<OfflineWindow> offline;
  std::vector<PartitionSpec> partitions;
  bool commit_enabled = true;
  double p_star = 1e-6;
  double gamma = 0.99;
  std::optional<double> finality_threshold;
  double max_exact_cost = 1e6;
  RewardParams rewards;
  Round kappa = 10;
  bool use_global_beacon = false;
  bool dump_tree = false;

  Stake total_stake() const {
    Stake n = 0;
    for (Stake s : stakes) n += s;
    return n;
  }

  void validate() const {
    if (rounds < 1) throw ConfigError("rounds: must be >= 1");
    if (stakes.empty()) throw ConfigError("stakes: at least one node required");
    for (std::size_t i = 0; i < stakes.size(); ++i)
      if (stakes[i] <= 0)
        throw ConfigError("stakes[" + std::to_string(i) + "]: must be positive");
    if (delta1 <= 0 || delta2 <= 0) throw ConfigError("delta1/delta2: must be > 0");
    if (!(alpha >= 0.0 && alpha < 1.0 / 3.0)) throw ConfigError("alpha: must be in [0, 1/3)");
    if (election.q < 1 || election.q > total_stake())
      throw ConfigError("election.q: must be in [1, total stake]");
    if (election.l < 1) throw ConfigError("election.l: must be >= 1");
    if (!(p_star > 0.0 && p_star < 1.0)) throw ConfigError("p_star: must be in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma: must be in (0,1)");
    if (kappa < 1) throw ConfigError("kappa: must be >= 1");
    latency.validate();
    int n_nodes = static_cast<int>(stakes.size());
    for (int a : adversary_nodes)
      if (a < 0 || a >= n_nodes) throw ConfigError("adversary_nodes: index out of range");
    for (const auto& w : offline) {
      if (w.node < 0 || w.node >= n_nodes) throw ConfigError("offline.node: out of range");
      if (w.from < 1 || w.to < w.from) throw ConfigError("offline: bad round window");
    }
    for (std::size_t i = 0; i < partitions.size(); ++i) {
      const auto& p = partitions[i];
      if (p.from < 1 || p.to < p.from) throw ConfigError("partitions: bad round range");
      if (p.groups.size() < 2) throw ConfigError("partitions.groups: need at least two");
      std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
      for (const auto& g : p.groups)
        for (int m : p.groups.empty() ? std::vector<int>{} : g) {
          if (m < 0 || m >= n_nodes) throw ConfigError("partitions.groups: index out of range");
          if (seen[static_cast<std::size_t>(m)])
            throw OverlapError("partitions.groups: node in two groups");
          seen[static_cast<std::size_t>(m)] = true;
        }
      for (int m = 0; m < n_nodes; ++m)
        if (!seen[static_cast<std::size_t>(m)])
          throw ConfigError("partitions.groups: node " + std::to_string(m) + " unassigned");
      for (std::size_t j = 0; j < i; ++j)
        if (!(p.to < partitions[j].from || partitions[j].to < p.from))
          throw OverlapError("partitions: overlapping round ranges");
    }
  }
};

// Equal-stake helper used by the experiments and tests: `adversary_count`
// leading nodes are adversarial and alpha defaults to their stake fraction.
inline SimConfig uniform_config(int num_nodes, Stake stake_each, Stake q,
                                int adversary_count = 0) {
  SimConfig cfg;
  cfg.stakes.assign(static_cast<std::size_t>(num_nodes), stake_each);
  cfg.election.q = q;
  cfg.election.l = 1;
  for (int i = 0; i < adversary_count; ++i) cfg.adversary_nodes.push_back(i);
  cfg.alpha = adversary_count == 0
                  ? 0.0
                  : static_cast<double>(adversary_count * stake_each) /
                        static_cast<double>(num_nodes * stake_each);
  return cfg;
}

struct RoundRow {
  Round round = 0;
  Stake main_chain_stake = 0;  // cumulative, omniscient observer
  std::int64_t votes_emitted = 0;
  std::int64_t blocks_emitted = 0;
  std::int64_t messages_sent = 0;
  Round observer_commit = 0;
};

struct SimMetrics {
  double psi_b = 0.0;
  double psi_v = 0.0;
  std::int64_t blocks_emitted = 0;
  std::int64_t votes_emitted = 0;
  std::int64_t blocks_stale = 0;
  std::int64_t votes_stale = 0;
  std::int64_t votes_on_chain = 0;
  std::int64_t votes_in_virtual = 0;
  std::int64_t messages_sent = 0;
  std::int64_t equivocations_detected = 0;
  std::int64_t conflicting_commits = 0;
  Stake main_chain_stake = 0;
  std::int64_t main_chain_blocks = 0;
  std::int64_t honest_main_blocks = 0;
  std::vector<double> rewards;  // per node, final main chain
  std::vector<Round> commit_height;  // per node
  std::map<std::int64_t, std::int64_t> commit_latency_hist;
  std::vector<RoundRow> per_round;
  std::string observer_tree_dump;

  std::string to_csv(const SimConfig& cfg) const;
};

namespace detail {

struct VoteMsg {
  Vote vote;
  std::uint64_t id;
};

struct BlockMsg {
  std::vector<VirtualBlock> virtuals;
  Block block;
  std::uint64_t id;
};

using Payload = std::variant<VoteMsg, BlockMsg>;

struct Event {
  double time;
  std::uint64_t seq;
  int kind;  // 0 vote phase, 1 block phase, 2 round end, 3 delivery, 4 gst
  Round round = 0;
  int receiver = -1;
  std::optional<Payload> payload;
};

struct EventOrder {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

// A protocol view with an orphan buffer for out-of-order block bundles.
struct View {
  NodeState state;
  std::multimap<Digest, BlockMsg> orphans;

  explicit View(NodeId id, const Digest& genesis) : state(id, genesis) {}
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    base_ = derive("laksa-sim", cfg_.seed);
    genesis_seed_ = derive_from(base_, "genesis-seed", 0);
    genesis_ = genesis_digest(genesis_seed_);
    std::vector<std::pair<NodeId, Stake>> entries;
    for (std::size_t i = 0; i < cfg_.stakes.size(); ++i)
      entries.push_back({NodeId::from_index(i), cfg_.stakes[i]});
    dist_ = StakeDistribution::from_entries(entries);
    pcfg_.dist = &dist_;
    pcfg_.election = cfg_.election;
    pcfg_.beacon.kappa = cfg_.kappa;
    pcfg_.beacon.genesis_seed = genesis_seed_;
    pcfg_.use_global_beacon = cfg_.use_global_beacon;
    pcfg_.scheme = &scheme_;
    pcfg_.alpha_assumed = cfg_.alpha;
    pcfg_.max_exact_cost = cfg_.max_exact_cost;
    pcfg_.rewards = cfg_.rewards;
    adversary_.assign(cfg_.stakes.size(), false);
    for (int a : cfg_.adversary_nodes) adversary_[static_cast<std::size_t>(a)] = true;
    for (std::size_t i = 0; i < cfg_.stakes.size(); ++i) {
      views_.emplace_back(NodeId::from_index(i), genesis_);
      init_commit(views_.back().state);
      node_index_[NodeId::from_index(i)] = static_cast<int>(i);
    }
    observer_ = std::make_unique<View>(NodeId::from_index(1u << 30), genesis_);
    init_commit(observer_->state);
    adv_views_.emplace_back(NodeId::from_index((1u << 30) + 1), genesis_);
  }

  SimMetrics run() {
    schedule_phases();
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      switch (ev.kind) {
        case 0: vote_phase(ev.round); break;
        case 1: block_phase(ev.round); break;
        case 2: round_end(ev.round); break;
        case 3: deliver(ev); break;
        case 4: gst(ev.round); break;
        case 5: partition_start(ev.round); break;
      }
    }
    finalize_metrics();
    return std::move(metrics_);
  }

 private:
  double round_len() const { return cfg_.delta1 + cfg_.delta2; }
  double round_start(Round r) const { return static_cast<double>(r - 1) * round_len(); }
  Round round_at(double t) const {
    auto r = static_cast<Round>(std::floor(t / round_len())) + 1;
    return std::min(std::max<Round>(r, 1), cfg_.rounds);
  }

  void init_commit(NodeState& s) {
    s.commit_state.p_star = cfg_.p_star;
    s.commit_state.gamma = cfg_.gamma;
    s.commit_state.finality_threshold = cfg_.finality_threshold;
  }

  static Bytes32 derive(std::string_view tag, std::uint64_t v) {
    Sha256 h;
    h.update(tag);
    h.update_u64(v);
    return h.finalize();
  }

  static Bytes32 derive_from(const Bytes32& base, std::string_view tag, std::uint64_t a,
                             std::uint64_t b = 0) {
    Sha256 h;
    h.update(base);
    h.update(tag);
    h.update_u64(a);
    h.update_u64(b);
    return h.finalize();
  }

  static double unit_interval(const Bytes32& d, int lane) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | d[static_cast<std::size_t>(8 * lane + i)];
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  double latency_for(std::uint64_t msg_id, int receiver) const {
    Bytes32 d = derive_from(base_, "latency", msg_id, static_cast<std::uint64_t>(receiver));
    return cfg_.latency.sample(unit_interval(d, 0), unit_interval(d, 1));
  }

  Randomness block_rand(int node, Round r) const {
    return derive_from(base_, "block-rand", static_cast<std::uint64_t>(node),
                       static_cast<std::uint64_t>(r));
  }

  bool offline_at(int node, double t) const {
    Round r = round_at(t);
    for (const auto& w : cfg_.offline)
      if (w.node == node && w.from <= r && r <= w.to) return true;
    return false;
  }

  const PartitionSpec* active_partition(Round r) const {
    for (const auto& p : cfg_.partitions)
      if (p.from <= r && r <= p.to) return &p;
    return nullptr;
  }

  int group_of(int node, Round r) const {
    const PartitionSpec* p = active_partition(r);
    if (!p) return 0;
    for (std::size_t g = 0; g < p->groups.size(); ++g)
      for (int m : p->groups[g])
        if (m == node) return static_cast<int>(g);
    return 0;
  }

  void schedule_phases() {
    std::set<Round> part_starts, part_ends;
    for (const auto& p : cfg_.partitions) {
      part_starts.insert(p.from);
      if (p.to < cfg_.rounds) part_ends.insert(p.to + 1);
    }
    for (Round r = 1; r <= cfg_.rounds; ++r) {
      double t0 = round_start(r);
      if (part_ends.count(r)) queue_.push({t0, seq_++, 4, r, -1, std::nullopt});
      if (part_starts.count(r)) queue_.push({t0, seq_++, 5, r, -1, std::nullopt});
      queue_.push({t0, seq_++, 0, r, -1, std::nullopt});
      queue_.push({t0 + cfg_.delta1, seq_++, 1, r, -1, std::nullopt});
      queue_.push({t0 + round_len(), seq_++, 2, r, -1, std::nullopt});
    }
  }

  // --- message fan-out -----------------------------------------------------

  // Sends to every node (or only `group_limit` members); honest cross-group
  // sends during a partition are held back until GST. The omniscient
  // observer and the adversary's group views get instant copies.
  void broadcast(int sender, Round r, double t, const Payload& payload,
                 std::optional<int> group_limit = std::nullopt) {
    const PartitionSpec* part = active_partition(r);
    int sender_group = group_limit ? *group_limit : group_of(sender, r);
    int n = static_cast<int>(views_.size());
    for (int recv = 0; recv < n; ++recv) {
      if (recv == sender) continue;
      std::uint64_t msg_id = payload_id(payload);
      double dt;
      bool cross = part && group_of(recv, r) != sender_group;
      if (cross) {
        if (part->to >= cfg_.rounds) continue;  // never resumes within the run
        dt = round_start(part->to + 1) + latency_for(msg_id, recv);
      } else {
        dt = t + latency_for(msg_id, recv);
      }
      ++metrics_.messages_sent;
      ++row_messages_;
      if (offline_at(recv, dt)) continue;  // dropped at an offline receiver
      queue_.push({dt, seq_++, 3, r, recv, payload});
    }
    process_observer(payload, t);
    // the adversary sees its group's traffic immediately
    std::size_t g = std::min(static_cast<std::size_t>(sender_group), adv_views_.size() - 1);
    process_for_view(adv_views_[g], payload, t, /*trust=*/true);
    if (part && static_cast<std::size_t>(sender_group) < group_logs_.size())
      group_logs_[static_cast<std::size_t>(sender_group)].push_back(payload);
  }

  std::uint64_t payload_id(const Payload& p) const {
    if (const VoteMsg* v = std::get_if<VoteMsg>(&p)) return v->id;
    return std::get<BlockMsg>(p).id;
  }

  // --- phases ---------------------------------------------------------------

  void vote_phase(Round r) {
    row_votes_ = row_blocks_ = row_messages_ = 0;
    int n = static_cast<int>(views_.size());
    for (int i = 0; i < n; ++i) {
      if (offline_at(i, round_start(r))) continue;
      bool adv = adversary_[static_cast<std::size_t>(i)];
      if (!adv || cfg_.strategy == AdversaryStrategy::none) {
        auto v = vote_step(views_[static_cast<std::size_t>(i)].state, r, pcfg_);
        if (v) emit_vote(i, r, *v);
      }
    }
    // withholding adversaries stay silent; the others vote via their views
    if (cfg_.strategy == AdversaryStrategy::equivocate_fork)
      adversary_votes(r, /*all_groups=*/true);
    else if (cfg_.strategy == AdversaryStrategy::censor_votes)
      adversary_votes(r, /*all_groups=*/false);
  }

  // Adversaries vote from the shared group views; an equivocating adversary
  // supports every group's branch with its full elected stake.
  void adversary_votes(Round r, bool all_groups) {
    std::size_t groups = all_groups && active_partition(r) ? adv_views_.size() : 1;
    for (std::size_t g = 0; g < groups; ++g) {
      NodeState& view = adv_views_[g].state;
      ChainHead head = view.tree.main_chain(tie_beacon_provider(view.tree, r, pcfg_));
      Digest target = view.tree.latest_standard_ancestor(head.last_block);
      Randomness beacon = election_beacon(view.tree, target, r, pcfg_);
      for (std::size_t i = 0; i < views_.size(); ++i) {
        if (!adversary_[i] || offline_at(static_cast<int>(i), round_start(r))) continue;
        NodeId id = NodeId::from_index(i);
        Stake s = elected_stake(id, beacon, Role::vote, dist_, cfg_.election);
        if (s <= 0) continue;
        Vote v = make_vote(scheme_, id, r, target, s);
        view.tree.add_pending_vote(v, true);
        emit_vote(static_cast<int>(i), r, v, static_cast<int>(g));
      }
    }
  }

  void emit_vote(int sender, Round r, const Vote& v, std::optional<int> group = std::nullopt) {
    VoteMsg msg{v, next_msg_id_++};
    vote_ids_[digest_of(v)] = msg.id;
    ++metrics_.votes_emitted;
    ++row_votes_;
    note_message(SignedMessage{v});
    broadcast(sender, r, round_start(r), Payload{msg}, group);
  }

  void block_phase(Round r) {
    double t = round_start(r) + cfg_.delta1;
    int n = static_cast<int>(views_.size());
    for (int i = 0; i < n; ++i) {
      if (offline_at(i, t)) continue;
      bool adv = adversary_[static_cast<std::size_t>(i)];
      if (!adv) {
        LeaderOutput out =
            leader_step(views_[static_cast<std::size_t>(i)].state, r, block_rand(i, r), pcfg_);
        if (out.block) emit_block(i, r, t, std::move(out));
        continue;
      }
      switch (cfg_.strategy) {
        case AdversaryStrategy::none: {
          LeaderOutput out = leader_step(views_[static_cast<std::size_t>(i)].state, r,
                                         block_rand(i, r), pcfg_);
          if (out.block) emit_block(i, r, t, std::move(out));
          break;
        }
        case AdversaryStrategy::withhold_votes:
        case AdversaryStrategy::censor_votes: {
          // leaders act from the shared adversary view; censoring leaders
          // strip honest votes from V
          std::function<bool(const Vote&)> filter;
          if (cfg_.strategy == AdversaryStrategy::censor_votes)
            filter = [this](const Vote& v) {
              auto it = node_index_.find(v.voter);
              return it != node_index_.end() &&
                     adversary_[static_cast<std::size_t>(it->second)];
            };
          NodeState scratch = adv_views_[0].state;  // propose without committing the view
          scratch.id = NodeId::from_index(static_cast<std::size_t>(i));
          LeaderOutput out = leader_step(scratch, r, block_rand(i, r), pcfg_, filter);
          if (out.block) emit_block(i, r, t, std::move(out));
          break;
        }
        case AdversaryStrategy::equivocate_fork: {
          std::size_t groups = active_partition(r) ? adv_views_.size() : 1;
          for (std::size_t g = 0; g < groups; ++g) {
            NodeState scratch = adv_views_[g].state;
            scratch.id = NodeId::from_index(static_cast<std::size_t>(i));
            LeaderOutput out = leader_step(scratch, r, block_rand(i, r), pcfg_);
            if (out.block) emit_block(i, r, t, std::move(out), static_cast<int>(g));
          }
          break;
        }
      }
    }
  }

  void emit_block(int sender, Round r, double t, LeaderOutput out,
                  std::optional<int> group = std::nullopt) {
    BlockMsg msg{std::move(out.virtuals), std::move(*out.block), next_msg_id_++};
    block_ids_[digest_of(msg.block)] = msg.id;
    block_leader_[digest_of(msg.block)] = sender;
    ++metrics_.blocks_emitted;
    ++row_blocks_;
    note_message(SignedMessage{msg.block});
    broadcast(sender, r, t, Payload{msg}, group);
  }

  void round_end(Round r) {
    if (cfg_.commit_enabled) {
      for (std::size_t i = 0; i < views_.size(); ++i) {
        if (adversary_[i] && cfg_.strategy != AdversaryStrategy::none) continue;
        if (offline_at(static_cast<int>(i), round_start(r) + round_len() - 1e-9)) continue;
        scan_commits(views_[i].state, r);
      }
      scan_commits(observer_->state, r);
    }
    RoundRow row;
    row.round = r;
    row.main_chain_stake = observer_main_chain_stake();
    row.votes_emitted = row_votes_;
    row.blocks_emitted = row_blocks_;
    row.messages_sent = row_messages_;
    row.observer_commit = observer_->state.commit_state.last_commit;
    metrics_.per_round.push_back(row);
  }

  void scan_commits(NodeState& s, Round r) {
    std::size_t before = s.commit_state.committed.size();
    commit_scan(s, r, pcfg_, &pvalue_cache_);
    for (std::size_t i = before; i < s.commit_state.committed.size(); ++i) {
      Round made = s.tree.round_of(s.commit_state.committed[i]);
      ++metrics_.commit_latency_hist[r - made];
    }
  }

  // partition start: the adversary forks its intelligence per group
  void partition_start(Round r) {
    const PartitionSpec* p = active_partition(r);
    if (!p) return;
    group_logs_.assign(p->groups.size(), {});
    adv_views_.reserve(p->groups.size());
    while (adv_views_.size() < p->groups.size()) adv_views_.push_back(adv_views_[0]);
  }

  // GST: queued cross-group traffic was already scheduled for this moment;
  // the adversary's views merge by replaying the other groups' logs.
  void gst(Round r) {
    double t = round_start(r);
    for (std::size_t g = 0; g < adv_views_.size(); ++g) {
      for (std::size_t other = 0; other < group_logs_.size(); ++other) {
        if (other == g) continue;
        for (const Payload& p : group_logs_[other])
          process_for_view(adv_views_[g], p, t, /*trust=*/true);
      }
    }
    if (adv_views_.size() > 1)
      adv_views_.erase(adv_views_.begin() + 1, adv_views_.end());
    group_logs_.clear();
  }

  // --- delivery and views ---------------------------------------------------

  void deliver(const Event& ev) {
    int recv = ev.receiver;
    if (adversary_[static_cast<std::size_t>(recv)] &&
        cfg_.strategy != AdversaryStrategy::none)
      return;  // adversarial intelligence lives in the group views
    process_for_view(views_[static_cast<std::size_t>(recv)], *ev.payload, ev.time,
                     /*trust=*/false);
  }

  void process_observer(const Payload& p, double t) {
    process_for_view(*observer_, p, t, /*trust=*/true);
  }

  void process_for_view(View& view, const Payload& payload, double t, bool trust) {
    if (const VoteMsg* vm = std::get_if<VoteMsg>(&payload)) {
      const Vote& v = vm->vote;
      if (!trust) {
        ValidationResult res = validate_for(view.state, v, t);
        if (!res.ok()) return;
      }
      bool timely = t < round_start(v.round) + cfg_.delta1;
      view.state.tree.add_pending_vote(v, timely || trust);
      return;
    }
    const BlockMsg& bm = std::get<BlockMsg>(payload);
    Digest need = bm.virtuals.empty() ? bm.block.parent_hash : bm.virtuals.front().parent_hash;
    if (!view.state.tree.contains(need)) {
      view.orphans.emplace(need, bm);
      return;
    }
    insert_bundle(view, bm, t, trust);
  }

  void insert_bundle(View& view, const BlockMsg& bm, double t, bool trust) {
    for (const VirtualBlock& vb : bm.virtuals) view.state.tree.insert_virtual(vb);
    if (!trust) {
      ValidationResult res = validate_for(view.state, bm.block, t);
      if (!res.ok()) return;
    }
    if (view.state.tree.insert_block(bm.block) != InsertResult::inserted) return;
    // anything orphaned on this block can now link
    Digest d = digest_of(bm.block);
    drain_orphans(view, d, t, trust);
    for (const VirtualBlock& vb : bm.virtuals) drain_orphans(view, digest_of(vb), t, trust);
  }

  void drain_orphans(View& view, const Digest& parent, double t, bool trust) {
    auto range = view.orphans.equal_range(parent);
    std::vector<BlockMsg> ready;
    for (auto it = range.first; it != range.second; ++it) ready.push_back(it->second);
    view.orphans.erase(range.first, range.second);
    for (const BlockMsg& bm : ready) insert_bundle(view, bm, t, trust);
  }

  ValidationResult validate_for(NodeState& s, const Vote& v, double t) {
    ValidationContext ctx = context_for(s, t);
    return validate_vote(v, ctx, s.tree);
  }

  ValidationResult validate_for(NodeState& s, const Block& b, double t) {
    ValidationContext ctx = context_for(s, t);
    return validate_block(b, ctx, s.tree);
  }

  ValidationContext context_for(NodeState& s, double t) {
    ValidationContext ctx;
    ctx.current_round = round_at(t);
    ctx.dist = &dist_;
    ctx.params = cfg_.election;
    ctx.scheme = &scheme_;
    ctx.beacon_for = [this, &s](Round r, const Digest& parent) {
      return election_beacon(s.tree, parent, r, pcfg_);
    };
    ctx.elected_override = [this, &s](const NodeId& pk, Round r, const Digest& parent,
                                      Role role) {
      return cached_elected(s.tree, pk, r, parent, role);
    };
    return ctx;
  }

  // Committee counts are memoized per beacon value; all honest views in a
  // synchronous run share one election per round.
  Stake cached_elected(const BlockTree& tree, const NodeId& pk, Round r, const Digest& parent,
                       Role role) {
    Randomness beacon = election_beacon(tree, parent, r, pcfg_);
    if (cfg_.election.mode == ElectionMode::vrf_binomial)
      return elected_stake(pk, beacon, role, dist_, cfg_.election);
    auto key = std::make_pair(beacon, role);
    auto it = election_cache_.find(key);
    if (it == election_cache_.end()) {
      Stake size = role == Role::vote ? cfg_.election.q : cfg_.election.l;
      it = election_cache_.emplace(key, sample_counts(size, beacon, role, dist_)).first;
    }
    std::size_t idx = dist_.index_of(pk);
    if (idx == dist_.size()) return 0;
    return it->second[idx];
  }

  // equivocation bookkeeping over everything emitted, via the observer view
  void note_message(const SignedMessage& msg) {
    auto key = std::make_pair(message_signer(msg), message_round(msg));
    auto it = first_sent_.find(key);
    if (it == first_sent_.end()) {
      first_sent_.emplace(key, msg);
      return;
    }
    if (message_target(it->second) == message_target(msg)) return;
    if (counted_equivocations_.insert(key).second) {
      auto evidence = detect_equivocation(it->second, msg, observer_->state.tree);
      if (evidence) ++metrics_.equivocations_detected;
    }
  }

  Stake observer_main_chain_stake() const {
    const BlockTree& tree = observer_->state.tree;
    ChainHead head = tree.main_chain(global_beacon(genesis_seed_, cfg_.rounds + 1));
    Stake total = 0;
    for (const Digest& d : tree.path_from_genesis(head.last_block))
      total += tree.own_stake_of(d) + tree.pending_stake_on(d);
    return total;
  }

  void finalize_metrics() {
    const BlockTree& tree = observer_->state.tree;
    ChainHead head = tree.main_chain(global_beacon(genesis_seed_, cfg_.rounds + 1));
    std::vector<Digest> path = tree.path_from_genesis(head.last_block);
    std::set<Digest> on_path(path.begin(), path.end());
    metrics_.main_chain_stake = observer_main_chain_stake();
    RewardLedger ledger;
    std::set<Digest> landed_votes;
    for (const Digest& d : path) {
      if (d == tree.genesis()) continue;
      apply_rewards(tree, d, cfg_.rewards, ledger);
      if (tree.is_standard(d)) {
        ++metrics_.main_chain_blocks;
        auto lit = block_leader_.find(d);
        if (lit != block_leader_.end() &&
            !adversary_[static_cast<std::size_t>(lit->second)])
          ++metrics_.honest_main_blocks;
        for (const Vote& v : tree.block(d)->votes) landed_votes.insert(digest_of(v));
      } else {
        for (const Vote& v : tree.virtual_block(d)->votes) {
          Digest vd = digest_of(v);
          if (vote_ids_.count(vd)) {
            landed_votes.insert(vd);
            ++metrics_.votes_in_virtual;
          }
        }
      }
    }
    for (const auto& [vd, id] : vote_ids_) {
      if (landed_votes.count(vd)) continue;
      ++metrics_.votes_stale;
    }
    metrics_.votes_on_chain =
        static_cast<std::int64_t>(landed_votes.size()) - metrics_.votes_in_virtual;
    for (const auto& [bd, id] : block_ids_)
      if (!on_path.count(bd)) ++metrics_.blocks_stale;
    metrics_.psi_b = metrics_.blocks_emitted == 0
                         ? 0.0
                         : static_cast<double>(metrics_.blocks_stale) /
                               static_cast<double>(metrics_.blocks_emitted);
    metrics_.psi_v = metrics_.votes_emitted == 0
                         ? 0.0
                         : static_cast<double>(metrics_.votes_stale) /
                               static_cast<double>(metrics_.votes_emitted);
    metrics_.rewards.assign(views_.size(), 0.0);
    for (std::size_t i = 0; i < views_.size(); ++i) {
      auto it = ledger.find(NodeId::from_index(i));
      if (it != ledger.end()) metrics_.rewards[i] = it->second;
    }
    metrics_.commit_height.assign(views_.size(), 0);
    for (std::size_t i = 0; i < views_.size(); ++i)
      metrics_.commit_height[i] = views_[i].state.commit_state.last_commit;
    metrics_.conflicting_commits = count_conflicting_commits();
    if (cfg_.dump_tree) metrics_.observer_tree_dump = tree.dump();
  }

  // Conflicts exist when the union of all honest committed blocks is not
  // totally ordered by ancestry in the omniscient view.
  std::int64_t count_conflicting_commits() {
    const BlockTree& tree = observer_->state.tree;
    std::vector<Digest> all;
    std::set<Digest> seen;
    for (std::size_t i = 0; i < views_.size(); ++i) {
      if (adversary_[i]) continue;
      for (const Digest& d : views_[i].state.commit_state.committed)
        if (seen.insert(d).second && tree.contains(d)) all.push_back(d);
    }
    std::sort(all.begin(), all.end(), [&](const Digest& a, const Digest& b) {
      return tree.round_of(a) < tree.round_of(b);
    });
    std::int64_t conflicts = 0;
    for (std::size_t i = 1; i < all.size(); ++i)
      if (!tree.is_ancestor(all[i - 1], all[i])) ++conflicts;
    return conflicts;
  }

  SimConfig cfg_;
  Bytes32 base_{};
  Randomness genesis_seed_{};
  Digest genesis_{};
  StakeDistribution dist_;
  TokenSignatureScheme scheme_;
  ProtocolConfig pcfg_;
  std::vector<View> views_;
  std::vector<bool> adversary_;
  std::unique_ptr<View> observer_;
  std::vector<View> adv_views_;
  std::vector<std::vector<Payload>> group_logs_;
  std::unordered_map<NodeId, int, NodeIdHash> node_index_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_msg_id_ = 0;
  std::unordered_map<Digest, std::uint64_t, Bytes32Hash> vote_ids_;
  std::unordered_map<Digest, std::uint64_t, Bytes32Hash> block_ids_;
  std::unordered_map<Digest, int, Bytes32Hash> block_leader_;
  std::map<std::pair<NodeId, Round>, SignedMessage> first_sent_;
  std::set<std::pair<NodeId, Round>> counted_equivocations_;
  std::map<std::pair<Bytes32, Role>, std::vector<Stake>> election_cache_;
  PValueCache pvalue_cache_;
  SimMetrics metrics_;
  std::int64_t row_votes_ = 0, row_blocks_ = 0, row_messages_ = 0;
};

}  // namespace detail

inline SimMetrics run(const SimConfig& cfg) {
  detail::Engine engine(cfg);
  return engine.run();
}

inline std::string SimMetrics::to_csv(const SimConfig& cfg) const {
  std::ostringstream os;
  os.setf(std::ios::fmtflags(0), std::ios::floatfield);
  os.precision(12);
  os << "# laksa-sim run\n";
  os << "# config: seed=" << cfg.seed << " rounds=" << cfg.rounds
     << " nodes=" << cfg.stakes.size() << " n=" << cfg.total_stake()
     << " q=" << cfg.election.q << " l=" << cfg.election.l
     << " mode=" << (cfg.election.mode == ElectionMode::fixed_sample ? "fixed" : "vrf")
     << " delta1=" << cfg.delta1 << " delta2=" << cfg.delta2
     << " alpha=" << cfg.alpha << " strategy=" << strategy_name(cfg.strategy)
     << " p_star=" << cfg.p_star << " gamma=" << cfg.gamma << " kappa=" << cfg.kappa
     << " beacon=" << (cfg.use_global_beacon ? "global" : "chain") << "\n";
  os << "round,main_chain_stake,votes_emitted,blocks_emitted,messages_sent,observer_commit\n";
  for (const RoundRow& row : per_round)
    os << row.round << ',' << row.main_chain_stake << ',' << row.votes_emitted << ','
       << row.blocks_emitted << ',' << row.messages_sent << ',' << row.observer_commit
       << "\n";
  os << "# summary\n";
  os << "metric,value\n";
  os << "psi_b," << psi_b << "\n";
  os << "psi_v," << psi_v << "\n";
  os << "blocks_emitted," << blocks_emitted << "\n";
  os << "votes_emitted," << votes_emitted << "\n";
  os << "blocks_stale," << blocks_stale << "\n";
  os << "votes_stale," << votes_stale << "\n";
  os << "votes_on_chain," << votes_on_chain << "\n";
  os << "votes_in_virtual," << votes_in_virtual << "\n";
  os << "messages_sent," << messages_sent << "\n";
  os << "equivocations_detected," << equivocations_detected << "\n";
  os << "conflicting_commits," << conflicting_commits << "\n";
  os << "main_chain_stake," << main_chain_stake << "\n";
  os << "main_chain_blocks," << main_chain_blocks << "\n";
  os << "honest_main_blocks," << honest_main_blocks << "\n";
  for (std::size_t i = 0; i < rewards.size(); ++i)
    os << "reward_node_" << i << ',' << rewards[i] << "\n";
  for (std::size_t i = 0; i < commit_height.size(); ++i)
    os << "commit_height_node_" << i << ',' << commit_height[i] << "\n";
  for (const auto& [lat, count] : commit_latency_hist)
    os << "commit_latency_" << lat << ',' << count << "\n";
  return os.str();
}

}  // namespace laksa::sim
