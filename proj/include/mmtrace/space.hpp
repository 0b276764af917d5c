#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mmtrace/errors.hpp"

namespace mmtrace {

using PointId = std::size_t;

/// Relative slack applied to every closed-ball test, d(x, c) <= r.
/// Coordinates produced from decimal steps (0.1, 0.3, ...) otherwise
/// land on the wrong side of the boundary by one ulp.
inline constexpr double kBallSlack = 1e-12;

inline bool within(double d, double r) { return d <= r * (1.0 + kBallSlack); }

/// 2^{-k}
double dyadic(int k);

/// The unique integer k with 2^{-k-1} < r <= 2^{-k}.
int k_of_r(double r);

struct Ball {
  std::variant<PointId, std::vector<double>> center;
  double radius = 0.0;

  static Ball at(PointId id, double r) { return Ball{id, r}; }
  static Ball around(std::vector<double> c, double r) { return Ball{std::move(c), r}; }

  bool centered_on_point() const { return std::holds_alternative<PointId>(center); }
  PointId center_id() const { return std::get<PointId>(center); }
};

namespace detail {
struct SpaceData;
}

class PointIndex;

/// Finite weighted point cloud standing in for (X, d, mu).
///
/// Immutable after construction; copies share the underlying storage.
/// The metric is either coordinate-induced Euclidean or an explicit
/// symmetric matrix kept in packed lower-triangular form.
class Space {
 public:
  static Space from_coords(std::size_t dim, std::vector<double> coords, std::vector<double> weights,
                           double resolution, double c_res = 1.0);

  /// `distances` is either a full n*n row-major matrix or a packed strict
  /// lower triangle of length n*(n-1)/2 (row i holds d(i,0..i-1)).
  static Space from_matrix(std::size_t n, std::vector<double> distances, std::vector<double> weights,
                           double resolution, double c_res = 1.0);

  std::size_t size() const;
  std::size_t dim() const;
  bool has_coords() const;
  bool has_matrix() const;

  double weight(PointId i) const;
  std::span<const double> weights() const;
  std::span<const double> coords(PointId i) const;
  std::span<const double> all_coords() const;
  std::span<const double> packed_matrix() const;

  double resolution() const;
  double scale_floor() const;
  double c_res() const;
  double total_mass() const;

  /// Exact for matrix metrics and clouds up to 4096 points; the bounding-box
  /// diagonal (an upper bound) otherwise.
  double diameter() const;

  double distance(PointId a, PointId b) const;
  double distance_to(std::span<const double> c, PointId b) const;

  /// Largest k >= 0 with 2^{-k} >= scale_floor; -1 when scale_floor > 1.
  int max_scale() const;

  const PointIndex& index() const;

  /// mu(B) through the full index with whole-cell shortcuts (see PointIndex::fast_mass).
  double fast_mu(const Ball& ball) const;

  void check_id(PointId i) const;

 private:
  std::shared_ptr<const detail::SpaceData> d_;
  std::shared_ptr<const PointIndex> full_;
  std::shared_ptr<const std::vector<double>> full_cells_;

  friend class PointIndex;
};

/// Range-query structure over a subset of a Space.
///
/// Local indices refer to positions in `members()`, which is sorted by
/// point id. Coordinate spaces use a dense uniform grid over the bounding
/// box of the subset; matrix spaces fall back to a linear scan.
class PointIndex {
 public:
  PointIndex(const Space& space, std::vector<PointId> members);

  const std::vector<PointId>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const Space& space() const { return space_; }

  /// Local index of a point id, or nullopt when it is not a member.
  std::optional<std::uint32_t> local_of(PointId id) const;

  /// Members within closed distance r of the center, as sorted local indices.
  void query(const Ball& ball, std::vector<std::uint32_t>& out) const;
  std::vector<std::uint32_t> query(const Ball& ball) const;

  /// True when some member lies within closed distance r of the center.
  bool any_within(const Ball& ball) const;

  /// Distance from the center to the nearest member (infinity when empty).
  double nearest_distance(const Ball& center_only) const;

  /// Sum of `local_weights` over members of the ball, cell by cell with
  /// whole-cell masses for cells entirely inside the ball. The summation
  /// order is fixed by the grid, so results are reproducible, but they may
  /// differ in the last bits from a plain member-order sum.
  double fast_mass(const Ball& ball, std::span<const double> local_weights,
                   std::span<const double> cell_masses) const;

  /// Per-cell sums of local weights, for use with fast_mass.
  std::vector<double> cell_masses(std::span<const double> local_weights) const;

 private:
  template <typename Visit>
  void visit_cells(std::span<const double> c, double r, Visit&& visit) const;

  std::vector<double> center_coords(const Ball& ball, PointId& id_out, bool& by_id) const;
  double dist_from(const Ball& ball, std::span<const double> c, PointId member) const;

  Space space_;
  std::vector<PointId> members_;
  std::vector<std::uint32_t> local_lookup_;  // size n, UINT32_MAX when absent
  bool gridded_ = false;
  std::size_t dim_ = 0;
  double cell_ = 0.0;
  std::vector<double> origin_;
  std::vector<std::int64_t> extent_;       // cells per axis
  std::vector<std::uint32_t> cell_start_;  // CSR offsets, size ncells+1
  std::vector<std::uint32_t> cell_items_;  // local indices
};

struct SeparatedNet {
  int scale_k = 0;
  double separation = 0.0;
  std::vector<PointId> points;
  std::vector<std::size_t> index_set;
  bool maximal = true;
};

struct DoublingReport {
  double value = 1.0;
  PointId argmax_point = 0;
  double argmax_radius = 0.0;
};

struct DecayReport {
  double Q_est = 0.0;
  double q_est = 0.0;
  double C_Q = 0.0;
  double C_q = 0.0;
  double residual_Q = 0.0;
  double residual_q = 0.0;
  std::size_t pairs = 0;
};

std::vector<PointId> ball_members(const Space& space, const Ball& ball);
double mu_ball(const Space& space, const Ball& ball);

/// Greedy 2^{-k}-separated subset of `subset_ids`, scanning in ascending id
/// order from the lowest id. Maximal mode adds every point at distance
/// >= 2^{-k} from the points already chosen, so the covering radius is below
/// 2^{-k}; non-maximal mode uses twice the separation (still a 2^{-k}-separated
/// set, sparser, no covering guarantee).
SeparatedNet separated_net(const Space& space, std::span<const PointId> subset_ids, int k,
                           bool maximal = true);

std::size_t covering_multiplicity(const Space& space, std::span<const Ball> balls);

/// Largest mu(B_{2r}(x)) / mu(B_r(x)) over all points and dyadic r in [scale_floor, R].
DoublingReport doubling_constant(const Space& space, double R);

/// Log-log envelope fits of mu(small)/mu(big) against r(small)/r(big)
/// over concentric dyadic pairs with radii in [scale_floor, R].
DecayReport decay_exponents(const Space& space, double R);

}  // namespace mmtrace
