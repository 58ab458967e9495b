#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oracles {

inline double kahan_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// Nearest-rank quantile: the ceil(q*N)-th smallest value (1-indexed).
inline double nearest_rank_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return values[rank - 1];
}

/// Classic O(n*m) LCS length over token vectors.
inline size_t lcs_length(const std::vector<std::string>& a,
                         const std::vector<std::string>& b) {
  std::vector<std::vector<size_t>> dp(a.size() + 1,
                                      std::vector<size_t>(b.size() + 1, 0));
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      dp[i][j] = a[i - 1] == b[j - 1]
                     ? dp[i - 1][j - 1] + 1
                     : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return dp[a.size()][b.size()];
}

/// Mann-Whitney U of A against B by direct pairwise comparison.
inline double pairwise_u(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  }
  return u;
}

namespace detail {
inline void exact_u_recurse(const std::vector<double>& pooled, size_t n1,
                            size_t next, std::vector<double>& a,
                            std::vector<double>& b, double u_obs,
                            size_t& total, size_t& at_least) {
  if (a.size() == n1) {
    std::vector<double> rest = b;
    for (size_t i = next; i < pooled.size(); ++i) rest.push_back(pooled[i]);
    const double u = pairwise_u(a, rest);
    ++total;
    if (u >= u_obs - 1e-12) ++at_least;
    return;
  }
  if (pooled.size() - next < n1 - a.size()) return;
  a.push_back(pooled[next]);
  exact_u_recurse(pooled, n1, next + 1, a, b, u_obs, total, at_least);
  a.pop_back();
  b.push_back(pooled[next]);
  exact_u_recurse(pooled, n1, next + 1, a, b, u_obs, total, at_least);
  b.pop_back();
}
}  // namespace detail

/// Exact one-sided p-value P(U >= u_obs) by recursive enumeration of all
/// assignments of the pooled values.
inline double exact_u_p_value(std::span<const double> sample_a,
                              std::span<const double> sample_b) {
  std::vector<double> pooled(sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const double u_obs = pairwise_u(sample_a, sample_b);
  std::vector<double> a, b;
  size_t total = 0, at_least = 0;
  detail::exact_u_recurse(pooled, sample_a.size(), 0, a, b, u_obs, total,
                          at_least);
  return static_cast<double>(at_least) / static_cast<double>(total);
}

}  // namespace oracles
