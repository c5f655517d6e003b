// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "laksa/experiments.hpp"
#include "laksa/sim_config_io.hpp"

namespace {

void write_output(const std::string& out_path, const std::string& body) {
  if (out_path.empty() || out_path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + out_path);
  out << body;
}

int report(const laksa::experiments::ExperimentResult& res, const std::string& out_path) {
  write_output(out_path, res.csv);
  for (const auto& check : res.checks)
    std::cerr << (check.ok ? "ok   " : "FAIL ") << check.name
              << (check.detail.empty() ? "" : " (" + check.detail + ")") << "\n";
  return res.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laksa-sim: proof-of-stake committee-voting protocol simulator"};
  app.require_subcommand(1);

  std::string out_path = "-";
  app.add_option("--out", out_path, "output CSV path ('-' for stdout)")->capture_default_str();

  auto* anchors_cmd = app.add_subcommand("rate-anchors", "rate-function anchor values");

  laksa::experiments::Fig4Params f4;
  auto* fig4_cmd = app.add_subcommand("fig4", "Chernoff bound decay per committee size");
  fig4_cmd->add_option("--q", f4.q_list, "committee sizes");
  fig4_cmd->add_option("--n", f4.n, "total stake");
  fig4_cmd->add_option("--u", f4.u, "supporting stake under the null hypothesis");
  fig4_cmd->add_option("--sbar", f4.s_bar_list, "average support fractions");
  fig4_cmd->add_option("--kmax", f4.k_max, "rounds to tabulate");

  laksa::experiments::Fig8Params f8;
  auto* fig8_cmd = app.add_subcommand("fig8", "rounds to commit, fixed sampling vs VRF");
  fig8_cmd->add_option("--pstar", f8.p_star, "risk threshold");
  fig8_cmd->add_option("--gamma", f8.gamma, "sequential discount");
  fig8_cmd->add_option("--n", f8.n, "total stake");
  fig8_cmd->add_option("--u", f8.u, "supporting stake");
  fig8_cmd->add_option("--q", f8.q, "committee size");
  fig8_cmd->add_option("--sbar-lo", f8.s_bar_lo, "grid start");
  fig8_cmd->add_option("--sbar-hi", f8.s_bar_hi, "grid end");
  fig8_cmd->add_option("--sbar-step", f8.s_bar_step, "grid step");

  laksa::experiments::Table4Params t4;
  auto* table4_cmd = app.add_subcommand("table4", "naive committee-BFT fault probability");
  table4_cmd->add_option("--f", t4.f_list, "adversarial node counts");
  table4_cmd->add_option("--qfrac", t4.qfrac_list, "committee fractions q/n");

  auto* table5_cmd = app.add_subcommand("table5", "support variance, fixed vs VRF election");

  laksa::experiments::Fig7Params f7;
  std::string latency_table = "data/latency_quantiles.csv";
  auto* fig7_cmd = app.add_subcommand("fig7-trend", "simulated stale-rate trends");
  fig7_cmd->add_option("--latency-table", latency_table, "quantile CSV for the latency model")
      ->capture_default_str();
  fig7_cmd->add_option("--delta-mults", f7.delta_mults, "delta as multiples of median latency");
  fig7_cmd->add_option("--q", f7.q_list, "committee sizes");
  fig7_cmd->add_option("--nodes", f7.num_nodes, "number of nodes");
  fig7_cmd->add_option("--stake-each", f7.stake_each, "stake units per node");
  fig7_cmd->add_option("--rounds", f7.rounds, "rounds per grid cell");
  fig7_cmd->add_option("--seed", f7.seed, "base seed");

  std::string sim_config_path;
  std::string tree_path;
  auto* sim_cmd = app.add_subcommand("sim", "run one simulation from a JSON config");
  sim_cmd->add_option("--config", sim_config_path, "JSON config file")->required();
  sim_cmd->add_option("--dump-tree", tree_path, "also write the observer block tree");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(anchors_cmd))
      return report(laksa::experiments::rate_anchors(), out_path);
    if (app.got_subcommand(fig4_cmd)) return report(laksa::experiments::fig4(f4), out_path);
    if (app.got_subcommand(fig8_cmd)) return report(laksa::experiments::fig8(f8), out_path);
    if (app.got_subcommand(table4_cmd))
      return report(laksa::experiments::table4(t4), out_path);
    if (app.got_subcommand(table5_cmd)) return report(laksa::experiments::table5(), out_path);
    if (app.got_subcommand(fig7_cmd)) {
      std::ifstream in(latency_table);
      if (!in) {
        std::cerr << "cannot open latency table " << latency_table << "\n";
        return 2;
      }
      f7.latency = laksa::sim::LatencyModel::from_quantile_csv(in);
      return report(laksa::experiments::fig7_trend(f7), out_path);
    }
    if (app.got_subcommand(sim_cmd)) {
      laksa::sim::SimConfig cfg = laksa::sim::config_from_file(sim_config_path);
      if (!tree_path.empty()) cfg.dump_tree = true;
      laksa::sim::SimMetrics metrics = laksa::sim::run(cfg);
      write_output(out_path, metrics.to_csv(cfg));
      if (!tree_path.empty()) {
        std::ofstream tout(tree_path, std::ios::binary);
        if (!tout) throw std::runtime_error("cannot open tree dump file " + tree_path);
        tout << metrics.observer_tree_dump;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
