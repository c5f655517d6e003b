// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

// Independent oracles used only by tests. These deliberately take different
// computational routes from the library (lgamma-based coefficients, literal
// nested sums, urn simulation) so agreement is meaningful.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

inline double log_c(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

inline double hyper_pmf(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t i) {
  if (i < 0 || i > q || i > u || q - i > n - u) return 0.0;
  return std::exp(log_c(u, i) + log_c(n - u, q - i) - log_c(n, q));
}

// P(T_k >= t) by the literal nested-sum convolution: iterate over all
// (x_2,...,x_k) and close with the tail of X_1. Cost q^(k-1) * q.
inline double nested_sum_tail(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t k,
                              std::int64_t t) {
  if (k == 1) {
    double x = 0.0;
    for (std::int64_t i = std::max<std::int64_t>(t, 0); i <= q; ++i)
      x += hyper_pmf(n, u, q, i);
    return std::min(x, 1.0);
  }
  double total = 0.0;
  std::vector<std::int64_t> xs(static_cast<std::size_t>(k - 1), 0);
  while (true) {
    double prob = 1.0;
    std::int64_t sum = 0;
    for (std::int64_t x : xs) {
      prob *= hyper_pmf(n, u, q, x);
      sum += x;
    }
    if (prob > 0.0) {
      double tail1 = 0.0;
      for (std::int64_t i = std::max<std::int64_t>(t - sum, 0); i <= q; ++i)
        tail1 += hyper_pmf(n, u, q, i);
      total += prob * tail1;
    }
    std::size_t pos = 0;
    while (pos < xs.size() && ++xs[pos] > q) {
      xs[pos] = 0;
      ++pos;
    }
    if (pos == xs.size()) break;
  }
  return std::min(total, 1.0);
}

// One hypergeometric draw by urn simulation.
inline std::int64_t draw_hypergeom(std::mt19937_64& rng, std::int64_t n, std::int64_t u,
                                   std::int64_t q) {
  std::int64_t favorable = u;
  std::int64_t remaining = n;
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < q; ++i) {
    std::uniform_int_distribution<std::int64_t> pick(0, remaining - 1);
    if (pick(rng) < favorable) {
      ++hits;
      --favorable;
    }
    --remaining;
  }
  return hits;
}

struct McEstimate {
  double mean = 0.0;
  double stddev = 0.0;  // standard error of the mean
};

// Monte Carlo estimate of P(sum of k hypergeometric draws >= t).
inline McEstimate mc_sum_tail(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t k,
                              std::int64_t t, std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    std::int64_t total = 0;
    for (std::int64_t i = 0; i < k; ++i) total += draw_hypergeom(rng, n, u, q);
    if (total >= t) ++hits;
  }
  McEstimate est;
  est.mean = static_cast<double>(hits) / static_cast<double>(samples);
  est.stddev = std::sqrt(std::max(est.mean * (1.0 - est.mean), 1e-12) /
                         static_cast<double>(samples));
  return est;
}

// Monte Carlo fault rate of the naive committee-BFT rule (f-1 equivocators,
// two honest camps of f+1, threshold T = ceil(2fq/n)+1).
inline McEstimate mc_naive_bft(std::int64_t f, double q_frac, std::int64_t samples,
                               std::uint64_t seed) {
  std::int64_t n_a = f + 1;
  std::int64_t pool_f = f - 1;
  std::int64_t n = pool_f + 2 * n_a;
  auto q = static_cast<std::int64_t>(std::floor(q_frac * static_cast<double>(n)));
  std::int64_t threshold =
      static_cast<std::int64_t>(std::ceil(2.0 * static_cast<double>(f) *
                                          static_cast<double>(q) / static_cast<double>(n))) +
      1;
  std::mt19937_64 rng(seed);
  std::vector<int> kind(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    kind[static_cast<std::size_t>(i)] = i < pool_f ? 0 : (i < pool_f + n_a ? 1 : 2);
  std::int64_t faults = 0;
  std::vector<int> pool(kind);
  for (std::int64_t s = 0; s < samples; ++s) {
    pool = kind;
    std::int64_t xf = 0, xa = 0, xb = 0;
    std::int64_t remaining = n;
    for (std::int64_t d = 0; d < q; ++d) {
      std::uniform_int_distribution<std::int64_t> pick(0, remaining - 1);
      std::int64_t idx = pick(rng);
      int who = pool[static_cast<std::size_t>(idx)];
      pool[static_cast<std::size_t>(idx)] = pool[static_cast<std::size_t>(remaining - 1)];
      --remaining;
      if (who == 0) ++xf;
      else if (who == 1) ++xa;
      else ++xb;
    }
    if (xf + xa >= threshold && xf + xb >= threshold) ++faults;
  }
  McEstimate est;
  est.mean = static_cast<double>(faults) / static_cast<double>(samples);
  est.stddev = std::sqrt(std::max(est.mean * (1.0 - est.mean), 1e-12) /
                         static_cast<double>(samples));
  return est;
}

}  // namespace oracles
