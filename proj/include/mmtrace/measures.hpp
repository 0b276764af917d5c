#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmtrace/local_stats.hpp"
#include "mmtrace/regularity.hpp"

namespace mmtrace {

/// Measures m_k = sum_i 2^{k(theta - theta_i)} h^i on the union S, k = 0..k_max.
/// Weight vectors are indexed by union-local indices.
struct MeasureSequence {
  double epsilon = 0.5;
  int k_max = 0;
  double theta = 0.0;
  std::shared_ptr<const PointIndex> support;
  std::vector<std::vector<double>> weights_per_k;
  std::vector<std::vector<double>> density_per_k;  // m_k / m_0 pointwise

  const std::vector<double>& weights(int k) const { return weights_per_k.at(static_cast<std::size_t>(k)); }
  const std::vector<PointId>& ids() const { return support->members(); }
  const Space& space() const { return support->space(); }
};

/// Throws ParameterError for theta < theta_N or theta >= p (when p is given)
/// and ResolutionError when 2^{-k_max} falls below the scale floor.
MeasureSequence build_measure_sequence(const PiecewiseSet& s, double theta, int k_max,
                                       std::optional<double> p = std::nullopt);

/// Sequence from explicit per-k weights (used to probe the certificate).
MeasureSequence measure_sequence_from_weights(const PiecewiseSet& s, double theta,
                                              std::vector<std::vector<double>> weights_per_k);

struct TestSet {
  std::string name;
  std::vector<PointId> ids;
};

/// Pieces, nonempty pairwise piece intersections and the half-space cut
/// {x_1 <= median} of each piece (coordinate spaces only).
std::vector<TestSet> default_test_sets(const PiecewiseSet& s);

struct RegularityCertificate {
  bool m1 = false;
  double C1 = 0.0;
  bool m2 = false;
  double C2 = 0.0;
  bool m3 = false;
  double C3 = 0.0;
  bool m4 = false;
  std::vector<std::string> m5_names;
  std::vector<double> m5_ratios;
  bool m5 = false;
  std::vector<double> c_grid;
  std::vector<double> doubling_at_scale;  // per c
};

/// Scans M1-M5 with eps = 1/2 on dyadic radii >= 2 * scale_floor.
/// M2 uses every space point whose ball meets S; M3 uses every point of S.
RegularityCertificate verify_regular_sequence(const MeasureSequence& seq, std::span<const double> c_grid,
                                              std::span<const TestSet> test_sets);

struct ComparisonReport {
  double c = 0.0;
  double min_lower_ratio = 0.0;  // m_k(cB) / (2^{k(theta-theta_i)} H_i(cB cap S^i)), never below 1
  double max_upper_ratio = 0.0;  // m_k(cB) / (2^{k(theta-theta_i)} H_i(B_k(x) cap S^i))
  std::vector<int> scales;
  std::vector<double> max_upper_per_k;
  std::vector<int> skipped_scales;
  std::size_t pairs = 0;
};

ComparisonReport measure_comparison_check(const MeasureSequence& seq, const PiecewiseSet& s, double c);

/// sum_{k<=L} int E_{m_k}(f, B_{eps^k}(x))^p dm_k(x) divided by ||f||^p_{L_p(m_0)}.
double lp_tail_check(const MeasureSequence& seq, std::span<const double> f, double p, int L);

nlohmann::json to_json(const RegularityCertificate& c);
nlohmann::json to_json(const ComparisonReport& c);

}  // namespace mmtrace
