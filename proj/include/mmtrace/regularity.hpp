#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmtrace/space.hpp"

namespace mmtrace {

struct SubsetPiece {
  std::string name;
  std::vector<PointId> ids;     // sorted, unique
  double theta = 0.0;
  std::vector<double> weights;  // h^i, aligned with ids
  std::optional<std::pair<double, double>> adr_constants;
  bool verified = false;
};

/// Sorts ids (carrying weights along) and validates the piece.
SubsetPiece make_piece(const Space& space, std::string name, std::vector<PointId> ids, double theta,
                       std::vector<double> weights);

/// Ordered union of pieces with strictly increasing codimensions.
///
/// Piece-local indices are positions in `piece(i).ids`; union-local indices
/// are positions in `union_ids()`. Both coincide with the local indices of
/// the corresponding PointIndex.
class PiecewiseSet {
 public:
  const Space& space() const { return space_; }
  std::size_t N() const { return pieces_.size(); }
  const SubsetPiece& piece(std::size_t i) const { return pieces_[i]; }
  const std::vector<SubsetPiece>& pieces() const { return pieces_; }
  double theta_S() const { return pieces_.back().theta; }

  const std::vector<PointId>& union_ids() const { return union_index_->members(); }
  const PointIndex& union_index() const { return *union_index_; }
  const PointIndex& piece_index(std::size_t i) const { return *piece_index_[i]; }
  const std::vector<std::uint32_t>& piece_to_union(std::size_t i) const { return piece_to_union_[i]; }

  /// Values on the union restricted to piece i.
  std::vector<double> restrict_to_piece(std::span<const double> union_values, std::size_t i) const;

  /// Throws ParameterError unless theta_N < p.
  void check_trace_exponent(double p) const;

 private:
  friend PiecewiseSet compose_piecewise(const Space& space, std::vector<SubsetPiece> pieces);
  Space space_;
  std::vector<SubsetPiece> pieces_;
  std::shared_ptr<const PointIndex> union_index_;
  std::vector<std::shared_ptr<const PointIndex>> piece_index_;
  std::vector<std::vector<std::uint32_t>> piece_to_union_;
};

PiecewiseSet compose_piecewise(const Space& space, std::vector<SubsetPiece> pieces);

/// Dyadic radii from 1 down to 4 * scale_floor.
std::vector<double> default_r_grid(const Space& space);

struct AdrReport {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  bool ok = false;
  std::vector<double> r;
  std::vector<double> kappa1_per_r;
  std::vector<double> kappa2_per_r;
};

/// Two-sided comparison of sum_{B cap S} h with mu(B) / r^theta, over all
/// piece points as centers and the radii of r_grid.
AdrReport check_adr(const Space& space, const SubsetPiece& piece, std::span<const double> r_grid);

struct LcrReport {
  double lambda = 0.0;
  PointId argmin_point = 0;
  double argmin_radius = 0.0;
  std::vector<double> r;
  std::vector<double> lambda_per_r;
};

/// min of H_{theta,r}(B_r(x) cap S) r^theta / mu(B_r(x)) with greedy contents.
/// Centers at radius r form a maximal r/2-separated net of the subset
/// (clipped at the scale floor).
LcrReport check_lcr(const Space& space, std::span<const PointId> subset_ids, double theta,
                    std::span<const double> r_grid);

struct PorosityReport {
  double sigma = 0.0;
  std::vector<double> r_grid;
  std::vector<std::vector<char>> porous_points_per_scale;  // aligned with sorted subset ids
  std::vector<std::size_t> porous_count_per_scale;
  std::vector<PointId> subset;
  bool is_porous = false;
};

/// x in S belongs to S_r(sigma) when some space point c with
/// d(x, c) <= (1 - sigma) r has no S point within max(sigma r - h, 0).
PorosityReport porosity_scan(const Space& space, std::span<const PointId> subset_ids, double sigma,
                             std::span<const double> r_grid);

/// Largest sigma among {1, 3/4, 1/2, 3/8, 1/4, ...} (down to `min_sigma`) for
/// which the subset is porous at every scale; 0 when none is.
double porosity_sigma_estimate(const Space& space, std::span<const PointId> subset_ids,
                               std::span<const double> r_grid, double min_sigma = 1.0 / 64.0);

double porosity_product_sigma(std::span<const double> sigmas);

nlohmann::json to_json(const AdrReport& r);
nlohmann::json to_json(const LcrReport& r);
nlohmann::json to_json(const PorosityReport& r);

}  // namespace mmtrace
