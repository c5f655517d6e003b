// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "laksa/sha256.hpp"
#include "laksa/types.hpp"

namespace laksa {

enum class Role : std::uint8_t { vote = 0, lead = 1 };

inline std::string_view role_salt(Role r) { return r == Role::vote ? "vote" : "lead"; }

enum class ElectionMode { fixed_sample, vrf_binomial };

struct ElectionParams {
  Stake q = 1;  // committee stake units per round (expectation in vrf mode)
  Stake l = 1;  // leader slots per round (expectation in vrf mode)
  ElectionMode mode = ElectionMode::fixed_sample;
};

struct SizeExceedsStakeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// PRF_r(i || role): SHA-256 keyed by the round beacon.
inline Bytes32 prf(const Randomness& key, std::uint64_t index, Role role) {
  Sha256 h;
  h.update(key);
  h.update_u64(index);
  h.update(role_salt(role));
  return h.finalize();
}

// 256-bit PRF output reduced mod m. The modulo bias is at most 2^-192 for
// any m < 2^64 and is ignored.
inline std::uint64_t mod_bytes(const Bytes32& b, std::uint64_t m) {
  unsigned __int128 r = 0;
  for (std::uint8_t byte : b) r = (r << 8 | byte) % m;
  return static_cast<std::uint64_t>(r);
}

// Fenwick tree over per-entry remaining unit counts; locates the k-th
// remaining unit (0-based) in canonical entry order.
class FenwickCounts {
 public:
  explicit FenwickCounts(const std::vector<std::pair<NodeId, Stake>>& entries)
      : n_(entries.size()), tree_(entries.size() + 1, 0) {
    for (std::size_t i = 0; i < n_; ++i) add(i, entries[i].second);
  }

  void add(std::size_t i, Stake delta) {
    for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += delta;
  }

  // Entry owning the k-th remaining unit.
  std::size_t find_kth(Stake k) const {
    std::size_t pos = 0;
    std::size_t mask = 1;
    while (mask * 2 <= n_) mask *= 2;
    for (; mask > 0; mask /= 2) {
      std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] <= k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos;  // 0-based entry index
  }

 private:
  std::size_t n_;
  std::vector<Stake> tree_;
};

inline constexpr Stake kNaiveExpansionLimit = 4096;

}  // namespace detail

// Draws `size` stake units without replacement from the expanded unit array
// (entries in canonical NodeId order, each repeated stake-many times);
// draw i picks index PRF_r(i||role) mod remaining-length and removes it.
// Naive expansion below detail::kNaiveExpansionLimit units, an identical
// prefix-sum search above it.
inline std::vector<NodeId> sample(Stake size, const Randomness& seed, Role role,
                                  const StakeDistribution& dist) {
  if (size < 0 || size > dist.total())
    throw SizeExceedsStakeError("sample size exceeds total stake");
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(size));
  const auto& entries = dist.entries();
  if (dist.total() <= detail::kNaiveExpansionLimit) {
    std::vector<std::uint32_t> units;  // entry index per unit
    units.reserve(static_cast<std::size_t>(dist.total()));
    for (std::size_t e = 0; e < entries.size(); ++e)
      for (Stake s = 0; s < entries[e].second; ++s)
        units.push_back(static_cast<std::uint32_t>(e));
    for (Stake i = 1; i <= size; ++i) {
      std::uint64_t k = detail::mod_bytes(detail::prf(seed, static_cast<std::uint64_t>(i), role),
                                          units.size());
      out.push_back(entries[units[k]].first);
      units.erase(units.begin() + static_cast<std::ptrdiff_t>(k));
    }
  } else {
    detail::FenwickCounts fw(entries);
    Stake remaining = dist.total();
    for (Stake i = 1; i <= size; ++i) {
      std::uint64_t k = detail::mod_bytes(detail::prf(seed, static_cast<std::uint64_t>(i), role),
                                          static_cast<std::uint64_t>(remaining));
      std::size_t e = fw.find_kth(static_cast<Stake>(k));
      out.push_back(entries[e].first);
      fw.add(e, -1);
      --remaining;
    }
  }
  return out;
}

// Reference implementation: always the naive expansion. Exposed so tests can
// assert draw-for-draw identity with the prefix-sum path.
inline std::vector<NodeId> sample_reference(Stake size, const Randomness& seed, Role role,
                                            const StakeDistribution& dist) {
  if (size < 0 || size > dist.total())
    throw SizeExceedsStakeError("sample size exceeds total stake");
  const auto& entries = dist.entries();
  std::vector<std::uint32_t> units;
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (Stake s = 0; s < entries[e].second; ++s)
      units.push_back(static_cast<std::uint32_t>(e));
  std::vector<NodeId> out;
  for (Stake i = 1; i <= size; ++i) {
    std::uint64_t k =
        detail::mod_bytes(detail::prf(seed, static_cast<std::uint64_t>(i), role), units.size());
    out.push_back(entries[units[k]].first);
    units.erase(units.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

// Per-entry draw counts (aligned with dist.entries()), one pass.
inline std::vector<Stake> sample_counts(Stake size, const Randomness& seed, Role role,
                                        const StakeDistribution& dist) {
  if (size < 0 || size > dist.total())
    throw SizeExceedsStakeError("sample size exceeds total stake");
  const auto& entries = dist.entries();
  std::vector<Stake> counts(entries.size(), 0);
  detail::FenwickCounts fw(entries);
  Stake remaining = dist.total();
  for (Stake i = 1; i <= size; ++i) {
    std::uint64_t k = detail::mod_bytes(detail::prf(seed, static_cast<std::uint64_t>(i), role),
                                        static_cast<std::uint64_t>(remaining));
    std::size_t e = fw.find_kth(static_cast<Stake>(k));
    ++counts[e];
    fw.add(e, -1);
    --remaining;
  }
  return counts;
}

inline Stake voter_stake(const NodeId& pk, const Randomness& seed,
                         const StakeDistribution& dist, const ElectionParams& params) {
  std::size_t idx = dist.index_of(pk);
  if (idx == dist.size()) return 0;
  return sample_counts(params.q, seed, Role::vote, dist)[idx];
}

inline Stake leader_stake(const NodeId& pk, const Randomness& seed,
                          const StakeDistribution& dist, const ElectionParams& params) {
  std::size_t idx = dist.index_of(pk);
  if (idx == dist.size()) return 0;
  return sample_counts(params.l, seed, Role::lead, dist)[idx];
}

// VRF-style sortition: every stake unit of pk joins the committee
// independently with probability tau/n, so the node's elected stake is
// Bin(stake(pk), tau/n) and the committee size across nodes has mean tau.
inline Stake sortition_vrf(const NodeId& pk, const Randomness& seed, Role role,
                           const StakeDistribution& dist, double tau) {
  Stake w = dist.stake_of(pk);
  if (w <= 0 || tau <= 0.0) return 0;
  double p = tau / static_cast<double>(dist.total());
  if (p >= 1.0) return w;
  Sha256 h;
  h.update("laksa-sortition");
  h.update(seed);
  h.update(pk.id);
  h.update(role_salt(role));
  Bytes32 d = h.finalize();
  std::seed_seq seq(d.begin(), d.end());
  std::mt19937_64 rng(seq);
  // threshold compare on raw 64-bit draws keeps the draw portable
  auto threshold = static_cast<std::uint64_t>(p * 18446744073709551616.0);
  Stake hits = 0;
  for (Stake i = 0; i < w; ++i)
    if (rng() < threshold) ++hits;
  return hits;
}

// Elected stake for a role under either election mode.
inline Stake elected_stake(const NodeId& pk, const Randomness& seed, Role role,
                           const StakeDistribution& dist, const ElectionParams& params) {
  if (params.mode == ElectionMode::fixed_sample) {
    return role == Role::vote ? voter_stake(pk, seed, dist, params)
                              : leader_stake(pk, seed, dist, params);
  }
  double tau = static_cast<double>(role == Role::vote ? params.q : params.l);
  return sortition_vrf(pk, seed, role, dist, tau);
}

}  // namespace laksa
