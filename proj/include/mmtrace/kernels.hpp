#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mmtrace/local_stats.hpp"
#include "mmtrace/space.hpp"

namespace mmtrace::kernels {

// Ball kernels over a weighted subset. `values` and `weights` are indexed by
// the local indices of `idx`; centers are arbitrary space point ids. Every
// output slot depends on its own center only, so results are identical for
// any thread count.

std::vector<double> ball_mass(const PointIndex& idx, std::span<const double> weights,
                              std::span<const PointId> centers, double r);

std::vector<double> ball_mean(const PointIndex& idx, std::span<const double> values, std::span<const double> weights,
                              std::span<const PointId> centers, double r);

std::vector<LocalStats> ball_stats(const PointIndex& idx, std::span<const double> values,
                                   std::span<const double> weights, std::span<const PointId> centers, double r);

/// Double average of |f(a) - f(b)| over (B_r(y) cap A) x (B_r(z) cap B) per pair (y, z).
std::vector<double> pair_cross(const PointIndex& a, std::span<const double> values_a, std::span<const double> weights_a,
                               const PointIndex& b, std::span<const double> values_b, std::span<const double> weights_b,
                               std::span<const std::pair<PointId, PointId>> pairs, double r);

/// avg over B_r(x) of |f(x) - f(y)|^p with f(x) given per center.
std::vector<double> ball_center_power(const PointIndex& idx, std::span<const double> values,
                                      std::span<const double> weights, std::span<const PointId> centers,
                                      std::span<const double> center_values, double r, double p);

using SortedList = std::vector<StatsWorkspace::Entry>;

/// Value-sorted (value, weight) lists of every ball B_r(center).
std::vector<SortedList> sorted_ball_lists(const PointIndex& idx, std::span<const double> values,
                                          std::span<const double> weights, std::span<const PointId> centers,
                                          double r);

/// cross_sorted(a[first], b[second]) for every index pair.
std::vector<double> cross_from_lists(std::span<const SortedList> a, std::span<const SortedList> b,
                                     std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);

/// Serial brute-force versions: linear membership scans, no spatial index,
/// no threads. Kept as the reference for the indexed kernels.
namespace reference {

std::vector<double> ball_mass(const PointIndex& idx, std::span<const double> weights,
                              std::span<const PointId> centers, double r);

std::vector<double> ball_mean(const PointIndex& idx, std::span<const double> values, std::span<const double> weights,
                              std::span<const PointId> centers, double r);

std::vector<LocalStats> ball_stats(const PointIndex& idx, std::span<const double> values,
                                   std::span<const double> weights, std::span<const PointId> centers, double r);

std::vector<double> pair_cross(const PointIndex& a, std::span<const double> values_a, std::span<const double> weights_a,
                               const PointIndex& b, std::span<const double> values_b, std::span<const double> weights_b,
                               std::span<const std::pair<PointId, PointId>> pairs, double r);

std::vector<double> ball_center_power(const PointIndex& idx, std::span<const double> values,
                                      std::span<const double> weights, std::span<const PointId> centers,
                                      std::span<const double> center_values, double r, double p);

}  // namespace reference

}  // namespace mmtrace::kernels
