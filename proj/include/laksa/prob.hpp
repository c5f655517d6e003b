// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "laksa/types.hpp"

// Commitment-probability engine: exact tails for sums of iid hypergeometric
// committee draws, Cramer-Chernoff bounds through the large-deviations rate
// function, binomial tails for VRF-style election, sequential-test
// thresholds, and the fault probability of the naive committee-BFT rule.
// Everything here is a pure function of its arguments; probabilities that
// can underflow are carried in log space.

namespace laksa::prob {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct CostExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kSearchTolerance = 1e-9;  // interval width
inline constexpr double kSeriesTolerance = 1e-15;  // relative term magnitude

// ln C(n, k), accumulated as sum of ln(n-i) - ln(m-i) over the shorter side
// m = min(k, n-k).
inline double log_bin_coef(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n || n < 0) throw DomainError("log_bin_coef: k outside [0, n]");
  std::int64_t m = std::min(k, n - k);
  double x = 0.0;
  for (std::int64_t i = 0; i < m; ++i)
    x += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(m - i));
  return x;
}

// P(X = i) for X ~ Hypergeometric(n, u, q): C(u,i) C(n-u, q-i) / C(n,q).
// Infeasible draws have probability zero.
inline double hypergeom_pmf(std::int64_t n, std::int64_t u, std::int64_t q,
                            std::int64_t i) {
  if (n < 0 || u < 0 || q < 0 || u > n || q > n)
    throw DomainError("hypergeom_pmf: bad parameters");
  if (i < 0 || i > q || i > u || q - i > n - u) return 0.0;
  return std::exp(log_bin_coef(u, i) + log_bin_coef(n - u, q - i) - log_bin_coef(n, q));
}

// P(T >= t) for T the sum of k iid Hypergeometric(n, u, q) draws, by
// iterative convolution of pmf vectors. Work grows as k^2 q^2; the guard
// k*(kq)*q mirrors that and trips CostExceeded beyond max_exact_cost.
inline double exact_tail(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t k,
                         std::int64_t t, double max_exact_cost = 5e7) {
  if (k < 1) throw DomainError("exact_tail: k must be >= 1");
  double cost = static_cast<double>(k) * static_cast<double>(k) *
                static_cast<double>(q) * static_cast<double>(q);
  if (cost > max_exact_cost)
    throw CostExceeded("exact_tail: k^2 q^2 = " + std::to_string(cost));
  if (t <= 0) return 1.0;
  if (t > k * q) return 0.0;
  std::vector<double> base(static_cast<std::size_t>(q) + 1);
  for (std::int64_t i = 0; i <= q; ++i)
    base[static_cast<std::size_t>(i)] = hypergeom_pmf(n, u, q, i);
  std::vector<double> dist = base;
  for (std::int64_t round = 2; round <= k; ++round) {
    std::vector<double> next(dist.size() + static_cast<std::size_t>(q), 0.0);
    for (std::size_t a = 0; a < dist.size(); ++a) {
      if (dist[a] == 0.0) continue;
      for (std::size_t b = 0; b < base.size(); ++b) next[a + b] += dist[a] * base[b];
    }
    dist = std::move(next);
  }
  double tail = 0.0;
  for (std::size_t i = dist.size(); i-- > static_cast<std::size_t>(t);) tail += dist[i];
  if (tail > 1.0) tail = 1.0;
  if (tail < 0.0) tail = 0.0;
  return tail;
}

namespace detail {

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// ln 2F1(-q, -u, -n, z) for nonnegative integers q <= n, u <= n, taking
// log(-z) to stay finite for z = 1 - e^lambda at large lambda. The series
// terminates after min(q, u) + 1 terms; all terms are positive.
inline double log_hyp2f1_terminating(std::int64_t q, std::int64_t u, std::int64_t n,
                                     double log_neg_z) {
  std::int64_t last = std::min(q, u);
  double log_term = 0.0;
  double log_sum = 0.0;
  for (std::int64_t m = 0; m < last; ++m) {
    double ratio = std::log(static_cast<double>(q - m)) +
                   std::log(static_cast<double>(u - m)) -
                   std::log(static_cast<double>(n - m)) + log_neg_z -
                   std::log(static_cast<double>(m + 1));
    log_term += ratio;
    log_sum = log_add_exp(log_sum, log_term);
    if (ratio < 0.0 && log_term < log_sum + std::log(kSeriesTolerance)) break;
  }
  return log_sum;
}

}  // namespace detail

// ln 2F1(a, b, c, z) for the terminating family a = -q, b = -u, c = -n used
// by the cumulant-generating function c_X(lambda) = ln 2F1(-q,-u,-n,1-e^l).
// z <= 0 sums in log space; small positive z is handled by direct signed
// summation of the (finite) alternating series.
inline double log_hyp2f1(double a, double b, double c, double z) {
  auto as_count = [](double v, const char* what) {
    double r = std::round(-v);
    if (r < 0 || std::abs(-v - r) > 1e-9)
      throw NonConvergent(std::string("log_hyp2f1: ") + what +
                          " must be a nonpositive integer");
    return static_cast<std::int64_t>(r);
  };
  std::int64_t q = as_count(a, "a");
  std::int64_t u = as_count(b, "b");
  std::int64_t n = as_count(c, "c");
  if (q > n || u > n) throw NonConvergent("log_hyp2f1: |a|, |b| must not exceed |c|");
  if (z == 0.0) return 0.0;
  if (z < 0.0) return detail::log_hyp2f1_terminating(q, u, n, std::log(-z));
  if (z > 1.0) throw NonConvergent("log_hyp2f1: z > 1 unsupported");
  long double term = 1.0L;
  long double sum = 1.0L;
  std::int64_t last = std::min(q, u);
  for (std::int64_t m = 0; m < last; ++m) {
    term *= -static_cast<long double>(q - m) * static_cast<long double>(u - m) /
            static_cast<long double>(n - m) * static_cast<long double>(z) /
            static_cast<long double>(m + 1);
    sum += term;
    if (std::abs(static_cast<double>(term)) < kSeriesTolerance * std::abs(static_cast<double>(sum)))
      break;
  }
  if (sum <= 0.0L) throw NonConvergent("log_hyp2f1: nonpositive series sum");
  return static_cast<double>(std::log(sum));
}

// phi_t(lambda) = lambda t - c_X(lambda), the function whose supremum over
// lambda >= 0 is the Chernoff rate at per-round support t.
inline double rate_func_value(std::int64_t n, std::int64_t u, std::int64_t q, double lambda,
                              double t) {
  if (lambda < 0) throw DomainError("rate_func_value: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  // log(-z) = log(e^lambda - 1), stable at both ends
  double log_neg_z = lambda + std::log1p(-std::exp(-lambda));
  return lambda * t - detail::log_hyp2f1_terminating(q, u, n, log_neg_z);
}

// r_X(t) = sup_{lambda >= 0} phi_t(lambda). Zero when t is at most the mean
// qu/n (no useful bound exists there); +inf when t exceeds the support q.
// The maximizer is bracketed by doubling (0,1,2,3) until phi stops
// increasing, then narrowed by trisection until the interval is below
// tolerance; the largest phi value evaluated anywhere is returned, which is
// always a valid exponent.
inline double maximize_rate_func(std::int64_t n, std::int64_t u, std::int64_t q, double t) {
  if (n <= 0 || u < 0 || q < 0 || u > n || q > n)
    throw DomainError("maximize_rate_func: bad parameters");
  double mean = static_cast<double>(q) * static_cast<double>(u) / static_cast<double>(n);
  if (t <= mean || q == 0) return 0.0;
  if (t > static_cast<double>(std::min(q, u)))
    return std::numeric_limits<double>::infinity();
  double lam[4] = {0.0, 1.0, 2.0, 3.0};
  double y[4];
  auto eval = [&](double l) { return rate_func_value(n, u, q, l, t); };
  for (int i = 0; i < 4; ++i) y[i] = eval(lam[i]);
  double best = 0.0;
  for (int i = 0; i < 4; ++i) best = std::max(best, y[i]);
  while (y[3] > y[2] && y[2] > y[1] && y[1] > y[0] && lam[3] < 1e5) {
    for (int i = 0; i < 4; ++i) lam[i] *= 2.0;
    for (int i = 0; i < 4; ++i) {
      y[i] = eval(lam[i]);
      best = std::max(best, y[i]);
    }
  }
  while (lam[3] - lam[0] > kSearchTolerance) {
    if (y[1] > y[2]) {
      lam[3] = lam[2];
      lam[2] = 2.0 / 3.0 * lam[3] + 1.0 / 3.0 * lam[0];
      lam[1] = 1.0 / 3.0 * lam[3] + 2.0 / 3.0 * lam[0];
    } else {
      lam[0] = lam[1];
      lam[1] = 2.0 / 3.0 * lam[0] + 1.0 / 3.0 * lam[3];
      lam[2] = 1.0 / 3.0 * lam[0] + 2.0 / 3.0 * lam[3];
    }
    for (int i = 0; i < 4; ++i) {
      y[i] = eval(lam[i]);
      best = std::max(best, y[i]);
    }
  }
  return best;
}

// ln of the Cramer-Chernoff bound on P(T >= t) over k rounds:
// -k r_X(t/k), capped at ln 1 = 0.
inline double cc_bound_log(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t k,
                           double t) {
  if (k < 1) throw DomainError("cc_bound: k must be >= 1");
  double r = maximize_rate_func(n, u, q, t / static_cast<double>(k));
  if (std::isinf(r)) return -std::numeric_limits<double>::infinity();
  double lg = -static_cast<double>(k) * r;
  return lg > 0.0 ? 0.0 : lg;
}

inline double cc_bound(std::int64_t n, std::int64_t u, std::int64_t q, std::int64_t k,
                       double t) {
  return std::exp(cc_bound_log(n, u, q, k, t));
}

struct TestParams {
  std::int64_t n = 0;
  double alpha = 0.0;           // assumed adversarial stake fraction, < 1/3
  std::int64_t q = 0;
  double p_star = 1e-6;
  double gamma = 0.99;
  double max_exact_cost = 5e7;  // cap on k^2 q^2 before falling back to bounds

  std::int64_t worst_case_u() const {
    return static_cast<std::int64_t>(
        std::floor(0.5 * (1.0 + alpha) * static_cast<double>(n)));
  }
};

struct PValue {
  enum class Method { exact, cc_bound, binomial };
  double value = 1.0;
  double log_value = 0.0;
  Method method = Method::exact;
};

// p-value for observing total support t over k rounds under the null
// hypothesis u = floor((1+alpha)/2 n): the exact convolution tail when the
// work cap allows, otherwise the Cramer-Chernoff bound (which dominates the
// exact value, so the dichotomy is sound for commitment).
inline PValue calculate_pvalue(const TestParams& params, std::int64_t k, std::int64_t t) {
  if (k < 1) throw DomainError("calculate_pvalue: k must be >= 1");
  std::int64_t u = params.worst_case_u();
  if (!(params.q <= u && u < params.n))
    throw DomainError("calculate_pvalue: requires q <= u < n");
  PValue out;
  double cost = static_cast<double>(k) * static_cast<double>(k) *
                static_cast<double>(params.q) * static_cast<double>(params.q);
  if (cost <= params.max_exact_cost) {
    out.value = exact_tail(params.n, u, params.q, k, t, params.max_exact_cost);
    out.log_value = out.value > 0 ? std::log(out.value)
                                  : -std::numeric_limits<double>::infinity();
    out.method = PValue::Method::exact;
  } else {
    out.log_value = cc_bound_log(params.n, u, params.q, k, static_cast<double>(t));
    out.value = std::exp(out.log_value);
    out.method = PValue::Method::cc_bound;
  }
  return out;
}

// ln P(Bin(trials, p) >= t), summed on the smaller side in log space.
inline double binomial_tail_log(std::int64_t trials, double p, std::int64_t t) {
  if (trials < 0 || p < 0.0 || p > 1.0 || t < 0 || t > trials)
    throw DomainError("binomial_tail: bad parameters");
  if (t <= 0) return 0.0;
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return 0.0;
  double lp = std::log(p);
  double lq = std::log1p(-p);
  auto log_pmf = [&](std::int64_t i) {
    return std::lgamma(static_cast<double>(trials) + 1) -
           std::lgamma(static_cast<double>(i) + 1) -
           std::lgamma(static_cast<double>(trials - i) + 1) +
           static_cast<double>(i) * lp + static_cast<double>(trials - i) * lq;
  };
  double mean = static_cast<double>(trials) * p;
  double neg_inf = -std::numeric_limits<double>::infinity();
  if (static_cast<double>(t) > mean) {
    double log_sum = neg_inf;
    for (std::int64_t i = t; i <= trials; ++i) {
      double lt = log_pmf(i);
      log_sum = detail::log_add_exp(log_sum, lt);
      if (lt < log_sum - 45.0) break;  // remaining terms shrink geometrically
    }
    return log_sum;
  }
  double log_lower = neg_inf;
  for (std::int64_t i = t - 1; i >= 0; --i) {
    double lt = log_pmf(i);
    log_lower = detail::log_add_exp(log_lower, lt);
    if (lt < log_lower - 45.0) break;
  }
  double lower = std::exp(log_lower);
  if (lower >= 1.0) return neg_inf;
  return std::log1p(-lower);
}

inline double binomial_tail(std::int64_t trials, double p, std::int64_t t) {
  return std::exp(binomial_tail_log(trials, p, t));
}

// Threshold for the i-th sequential trial: p* gamma^i. The total error over
// infinitely many trials is bounded by (gamma / (1-gamma)) p*.
inline double sequential_threshold(double p_star, double gamma, std::int64_t trial_index) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw DomainError("sequential_threshold: gamma must be in (0,1)");
  if (trial_index < 1) throw DomainError("sequential_threshold: trial index starts at 1");
  return p_star * std::pow(gamma, static_cast<double>(trial_index));
}

inline double sequential_threshold_log(double p_star, double gamma,
                                       std::int64_t trial_index) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw DomainError("sequential_threshold: gamma must be in (0,1)");
  if (trial_index < 1) throw DomainError("sequential_threshold: trial index starts at 1");
  return std::log(p_star) + static_cast<double>(trial_index) * std::log(gamma);
}

// Safety-fault probability of the naive committee-BFT rule: n = 3f+1 nodes
// split into f-1 equivocating voters and two honest camps of f+1, a
// committee of q = floor(q_frac n) drawn without replacement, and a block
// committed at T = ceil(2fq/n) + 1 votes. A fault needs both camps' blocks
// to reach T simultaneously. (This parametrization, with floor-rounded q,
// is the one that reproduces the reference grid; nearest-integer rounding
// does not.)
inline double naive_bft_fault_prob(std::int64_t f, double q_frac) {
  if (f < 1 || q_frac <= 0.0 || q_frac > 1.0)
    throw DomainError("naive_bft_fault_prob: bad parameters");
  std::int64_t n_a = f + 1;
  std::int64_t n_b = f + 1;
  std::int64_t pool_f = f - 1;
  std::int64_t n = pool_f + n_a + n_b;  // 3f + 1
  auto q = static_cast<std::int64_t>(std::floor(q_frac * static_cast<double>(n)));
  std::int64_t threshold =
      static_cast<std::int64_t>(
          std::ceil(2.0 * static_cast<double>(f) * static_cast<double>(q) /
                    static_cast<double>(n))) +
      1;
  std::vector<double> logfact(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t i = 1; i <= n; ++i)
    logfact[static_cast<std::size_t>(i)] =
        logfact[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));
  auto log_c = [&](std::int64_t nn, std::int64_t kk) {
    return logfact[static_cast<std::size_t>(nn)] - logfact[static_cast<std::size_t>(kk)] -
           logfact[static_cast<std::size_t>(nn - kk)];
  };
  double log_all = log_c(n, q);
  double p = 0.0;
  for (std::int64_t xf = 0; xf <= std::min(q, pool_f); ++xf) {
    std::int64_t lo_a = std::max<std::int64_t>(0, threshold - xf);
    std::int64_t hi_a = std::min(q - xf, n_a);
    for (std::int64_t xa = lo_a; xa <= hi_a; ++xa) {
      std::int64_t xb = q - xf - xa;
      if (xb < 0 || xb > n_b) continue;
      if (xf + xb < threshold) continue;
      p += std::exp(log_c(pool_f, xf) + log_c(n_a, xa) + log_c(n_b, xb) - log_all);
    }
  }
  return p;
}

struct VarianceRow {
  double mean = 0.0;
  double var_hpg = 0.0;
  double var_bin = 0.0;
  double ratio = 0.0;
};

// Mean and per-round support variance under the two election schemes:
// hypergeometric (fixed committee) vs binomial (VRF), and their ratio.
inline VarianceRow variance_table_row(std::int64_t n, std::int64_t u, std::int64_t q) {
  if (n <= 1 || u < 0 || q < 0 || u > n || q > n)
    throw DomainError("variance_table_row: bad parameters");
  VarianceRow row;
  double dn = static_cast<double>(n);
  double du = static_cast<double>(u);
  double dq = static_cast<double>(q);
  row.mean = dq * du / dn;
  row.var_hpg = dq * (du / dn) * ((dn - du) / dn) * ((dn - dq) / (dn - 1.0));
  double pp = du * dq / (dn * dn);
  row.var_bin = dn * pp * (1.0 - pp);
  row.ratio = row.var_hpg > 0.0 ? row.var_bin / row.var_hpg
                                : std::numeric_limits<double>::quiet_NaN();
  return row;
}

// Guarded memo for rate-function evaluations; hits are bit-identical to
// recomputation because the stored double is the computed double.
class RateFuncCache {
 public:
  double get(std::int64_t n, std::int64_t u, std::int64_t q, double t) {
    Key key{n, u, q, t};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    double r = maximize_rate_func(n, u, q, t);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(key, r);
    return r;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
  }

 private:
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, double>;
  mutable std::mutex mu_;
  std::map<Key, double> cache_;
};

}  // namespace laksa::prob
