#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mmtrace {

/// Mean, best-constant L1 deviation E and mean pairwise oscillation OSC of
/// a function on a finite weighted set. Zero mass yields all zeros.
struct LocalStats {
  double mean = 0.0;
  double best_dev = 0.0;
  double osc = 0.0;
  double mass = 0.0;
  double median = 0.0;
};

/// `values` and `weights` are indexed by the entries of `members`.
LocalStats local_stats(std::span<const double> values, std::span<const std::uint32_t> members,
                       std::span<const double> weights);

/// Reusable scratch for repeated evaluations on ball member lists.
///
/// Both E and OSC are evaluated through the gaps of the sorted values:
/// with L and R the weight at or below / above a gap g,
///   E * W   = sum g * min(L, R)      (attained at a weighted median)
///   OSC * W^2 = 2 * sum g * L * R
/// which keeps every term nonnegative.
class StatsWorkspace {
 public:
  using Entry = std::pair<double, double>;  // value, weight

  /// Cross average of two value-sorted weighted lists (merge walk).
  static double cross_sorted(std::span<const Entry> a, std::span<const Entry> b);

  LocalStats compute(std::span<const double> values, std::span<const std::uint32_t> members,
                     std::span<const double> weights);

  /// Weighted mean only.
  static double mean(std::span<const double> values, std::span<const std::uint32_t> members,
                     std::span<const double> weights);

  /// sum_{a in A} sum_{b in B} w_a w_b |f_a - f_b| / (W_A W_B); zero if either side has no mass.
  double cross_average(std::span<const double> values_a, std::span<const std::uint32_t> members_a,
                       std::span<const double> weights_a, std::span<const double> values_b,
                       std::span<const std::uint32_t> members_b, std::span<const double> weights_b);

 private:
  std::vector<std::pair<double, double>> buf_;
  std::vector<std::pair<double, double>> buf_b_;
};

}  // namespace mmtrace
