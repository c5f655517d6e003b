// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "laksa/sim.hpp"

// JSON config file ingestion for the simulator CLI. Kept out of sim.hpp so
// library users do not pay for the JSON dependency.

namespace laksa::sim {

inline LatencyModel latency_from_json(const nlohmann::json& j) {
  std::string kind = j.value("kind", "constant");
  if (kind == "constant") return LatencyModel::constant_of(j.value("value", 0.0));
  if (kind == "lognormal")
    return LatencyModel::lognormal_of(j.value("mu", 0.0), j.value("sigma", 1.0));
  if (kind == "empirical") {
    if (j.contains("table")) {
      std::ifstream in(j.at("table").get<std::string>());
      if (!in) throw ConfigError("latency.table: cannot open " +
                                 j.at("table").get<std::string>());
      return LatencyModel::from_quantile_csv(in);
    }
    std::vector<std::pair<double, double>> q;
    for (const auto& row : j.at("quantiles"))
      q.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
    return LatencyModel::empirical_of(std::move(q));
  }
  throw ConfigError("latency.kind: unknown kind '" + kind + "'");
}

inline SimConfig config_from_json(const nlohmann::json& j) {
  SimConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.rounds = j.value("rounds", cfg.rounds);
    if (j.contains("stakes")) {
      cfg.stakes.clear();
      for (const auto& s : j.at("stakes")) cfg.stakes.push_back(s.get<Stake>());
    } else if (j.contains("nodes")) {
      cfg.stakes.assign(j.at("nodes").get<std::size_t>(), j.value("stake_each", Stake{1}));
    }
    if (j.contains("adversary_nodes"))
      for (const auto& a : j.at("adversary_nodes")) cfg.adversary_nodes.push_back(a.get<int>());
    cfg.election.q = j.value("q", cfg.election.q);
    cfg.election.l = j.value("l", cfg.election.l);
    std::string mode = j.value("mode", "fixed");
    if (mode == "fixed")
      cfg.election.mode = ElectionMode::fixed_sample;
    else if (mode == "vrf")
      cfg.election.mode = ElectionMode::vrf_binomial;
    else
      throw ConfigError("mode: expected 'fixed' or 'vrf'");
    cfg.delta1 = j.value("delta1", cfg.delta1);
    cfg.delta2 = j.value("delta2", cfg.delta2);
    if (j.contains("latency")) cfg.latency = latency_from_json(j.at("latency"));
    cfg.alpha = j.value("alpha", cfg.alpha);
    std::string strat = j.value("strategy", "none");
    if (strat == "none")
      cfg.strategy = AdversaryStrategy::none;
    else if (strat == "equivocate-fork")
      cfg.strategy = AdversaryStrategy::equivocate_fork;
    else if (strat == "withhold-votes")
      cfg.strategy = AdversaryStrategy::withhold_votes;
    else if (strat == "censor-votes")
      cfg.strategy = AdversaryStrategy::censor_votes;
    else
      throw ConfigError("strategy: unknown strategy '" + strat + "'");
    if (j.contains("offline"))
      for (const auto& w : j.at("offline"))
        cfg.offline.push_back({w.at("node").get<int>(), w.at("from").get<Round>(),
                               w.at("to").get<Round>()});
    if (j.contains("partitions"))
      for (const auto& p : j.at("partitions")) {
        PartitionSpec spec;
        spec.from = p.at("from").get<Round>();
        spec.to = p.at("to").get<Round>();
        for (const auto& g : p.at("groups")) {
          std::vector<int> group;
          for (const auto& m : g) group.push_back(m.get<int>());
          spec.groups.push_back(std::move(group));
        }
        cfg.partitions.push_back(std::move(spec));
      }
    cfg.commit_enabled = j.value("commit_enabled", cfg.commit_enabled);
    cfg.p_star = j.value("p_star", cfg.p_star);
    cfg.gamma = j.value("gamma", cfg.gamma);
    if (j.contains("finality_threshold"))
      cfg.finality_threshold = j.at("finality_threshold").get<double>();
    cfg.max_exact_cost = j.value("max_exact_cost", cfg.max_exact_cost);
    cfg.rewards.r_lead = j.value("r_lead", cfg.rewards.r_lead);
    cfg.rewards.r_vote = j.value("r_vote", cfg.rewards.r_vote);
    cfg.rewards.r_incl = j.value("r_incl", cfg.rewards.r_incl);
    cfg.kappa = j.value("kappa", cfg.kappa);
    cfg.use_global_beacon = j.value("global_beacon", cfg.use_global_beacon);
    cfg.dump_tree = j.value("dump_tree", cfg.dump_tree);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline SimConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace laksa::sim
