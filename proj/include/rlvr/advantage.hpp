#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rlvr/errors.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

/// Below this group std the rewards are treated as identical. Binary rewards
/// have std either 0 or at least sqrt((1/G)(1 - 1/G)).
inline constexpr double kDegenerateEps = 1e-8;

/// Group-relative advantages (R_i - mean) / std. Population std by default.
/// A degenerate group (std < eps) gets all-zero advantages; there is no
/// epsilon in the denominator otherwise.
inline std::vector<double> normalize_group(std::span<const double> rewards,
                                           double degenerate_eps = kDegenerateEps,
                                           StdKind kind = StdKind::population) {
  const std::size_t n = rewards.size();
  if (n < 2) throw InvalidGroup("advantage normalization needs at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = kind == StdKind::population ? static_cast<double>(n)
                                                   : static_cast<double>(n - 1);
  const double std = std::sqrt(ss / denom);
  std::vector<double> adv(n, 0.0);
  if (std < degenerate_eps) return adv;
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / std;
  return adv;
}

inline bool is_zero_signal(std::span<const double> rewards) {
  if (rewards.empty()) throw InvalidGroup("zero-signal test on an empty group");
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  return *lo == *hi;
}

inline bool is_zero_signal(const Group& group) { return is_zero_signal(group.rewards()); }

inline void compute_advantages(Group& group, StdKind kind = StdKind::population) {
  group.advantages = normalize_group(group.rewards(), kDegenerateEps, kind);
}

}  // namespace rlvr
