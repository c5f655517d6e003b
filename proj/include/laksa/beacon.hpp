// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "laksa/chain.hpp"
#include "laksa/types.hpp"

namespace laksa {

struct BeaconParams {
  Round kappa = 10;  // stability depth; must exceed typical fork depth
  Randomness genesis_seed{};
};

// Bootstrap / shared-regime beacon: depends only on the genesis seed and the
// round index.
inline Randomness global_beacon(const Randomness& genesis_seed, Round j) {
  Sha256 h;
  h.update(genesis_seed);
  h.update_u64(static_cast<std::uint64_t>(j));
  return h.finalize();
}

// Round-j beacon extracted from leader randomness in stable blocks: the
// two-step extraction hashes the r-values of standard blocks with rounds in
// [j-2k, j-k] on the chain ending at `tip` (rounds with no standard block
// contribute nothing), then folds in the round index. Early rounds, and
// windows with no standard block, fall back to the genesis-seeded value.
// Observers sharing the chain prefix up to round j-k agree on the result.
inline Randomness round_beacon(const BlockTree& tree, const Digest& tip, Round j,
                               const BeaconParams& params) {
  if (j <= 2 * params.kappa) return global_beacon(params.genesis_seed, j);
  Round lo = j - 2 * params.kappa;
  Round hi = j - params.kappa;
  Sha256 inner;
  bool any = false;
  // walk tip -> genesis, collecting window r-values; path rounds are
  // strictly decreasing, so gather then feed in ascending round order
  std::vector<Randomness> rands;
  Digest cur = tip;
  while (true) {
    if (tree.kind_of(cur) == BlockTree::Kind::standard) {
      Round r = tree.round_of(cur);
      if (r < lo) break;
      if (r <= hi) {
        rands.push_back(tree.block(cur)->rand);
        any = true;
      }
    } else if (tree.kind_of(cur) == BlockTree::Kind::genesis) {
      break;
    }
    if (cur == tree.genesis()) break;
    cur = tree.parent_of(cur);
  }
  if (!any) return global_beacon(params.genesis_seed, j);
  for (auto it = rands.rbegin(); it != rands.rend(); ++it) inner.update(*it);
  Sha256 outer;
  outer.update(inner.finalize());
  outer.update_u64(static_cast<std::uint64_t>(j));
  return outer.finalize();
}

}  // namespace laksa
