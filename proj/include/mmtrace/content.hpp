#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmtrace/space.hpp"

namespace mmtrace {

enum class CoverMethod { greedy, exact, both };

std::string to_string(CoverMethod m);

/// Candidate count above which the exact solver refuses to run.
inline constexpr std::size_t kExactCandidateLimit = 24;

struct ContentQuery {
  std::vector<PointId> target;
  double theta = 0.0;
  double delta = std::numeric_limits<double>::infinity();
  CoverMethod method = CoverMethod::greedy;
};

struct CoverSolution {
  std::vector<Ball> balls;  // centered on point ids
  double value = 0.0;
  CoverMethod method_used = CoverMethod::greedy;
  std::optional<double> optimality_gap;  // greedy / exact - 1
  std::size_t candidates = 0;
};

/// sum mu(B_i) / r_i^theta over balls of radius < delta covering the target.
///
/// Candidates are centered on target points with dyadic radii in
/// [scale_floor, delta), capped at the first dyadic radius reaching the
/// diameter. `both` returns the greedy cover with its gap to the exact one.
CoverSolution hausdorff_content(const Space& space, const ContentQuery& query);

struct MeasureTrace {
  double value = 0.0;
  std::vector<double> deltas;
  std::vector<double> values;
  bool stabilized = true;  // last two values within 5% relative
  bool monotone = true;    // values nondecreasing as delta shrinks
};

/// Greedy contents at delta = 1, 1/2, ... down to 2 * scale_floor.
MeasureTrace hausdorff_measure(const Space& space, std::span<const PointId> target, double theta);

enum class WeightMode { analytic, content };

/// Discrete stand-in for H_theta restricted to the target. Analytic mode
/// takes generator cell elements (lengths, areas, or volumes aligned with
/// `target`); content mode uses the singleton content at delta = 2 * scale_floor.
std::vector<double> piece_measure_weights(const Space& space, std::span<const PointId> target, double theta,
                                          WeightMode mode,
                                          const std::optional<std::vector<double>>& elements = std::nullopt);

nlohmann::json to_json(const CoverSolution& sol);

}  // namespace mmtrace
