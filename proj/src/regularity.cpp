#include "mmtrace/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmtrace/content.hpp"

namespace mmtrace {

SubsetPiece make_piece(const Space& space, std::string name, std::vector<PointId> ids, double theta,
                       std::vector<double> weights) {
  require(!ids.empty(), ErrorKind::EmptySet, "piece '" + name + "' has no points");
  require(weights.size() == ids.size(), ErrorKind::InvalidParameter, "piece weights must align with ids");
  require(theta >= 0.0 && std::isfinite(theta), ErrorKind::InvalidParameter, "piece theta must be >= 0");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  SubsetPiece p;
  p.name = std::move(name);
  p.theta = theta;
  for (auto o : order) {
    space.check_id(ids[o]);
    require(weights[o] > 0.0 && std::isfinite(weights[o]), ErrorKind::InvalidParameter,
            "piece weights must be positive");
    require(p.ids.empty() || p.ids.back() != ids[o], ErrorKind::InvalidParameter, "duplicate id in piece");
    p.ids.push_back(ids[o]);
    p.weights.push_back(weights[o]);
  }
  return p;
}

PiecewiseSet compose_piecewise(const Space& space, std::vector<SubsetPiece> pieces) {
  require(!pieces.empty(), ErrorKind::InvalidParameter, "at least one piece required");
  for (std::size_t i = 1; i < pieces.size(); ++i)
    require(pieces[i].theta > pieces[i - 1].theta, ErrorKind::InvalidParameter,
            "piece codimensions must be strictly increasing");
  PiecewiseSet s;
  s.space_ = space;
  std::vector<PointId> all;
  for (const auto& p : pieces) {
    require(!p.ids.empty(), ErrorKind::EmptySet, "empty piece");
    require(std::is_sorted(p.ids.begin(), p.ids.end()), ErrorKind::InvalidParameter, "piece ids must be sorted");
    require(p.weights.size() == p.ids.size(), ErrorKind::InvalidParameter, "piece weights must align with ids");
    all.insert(all.end(), p.ids.begin(), p.ids.end());
    s.piece_index_.push_back(std::make_shared<const PointIndex>(space, p.ids));
  }
  s.union_index_ = std::make_shared<const PointIndex>(space, std::move(all));
  for (const auto& p : pieces) {
    std::vector<std::uint32_t> map(p.ids.size());
    for (std::size_t a = 0; a < p.ids.size(); ++a) map[a] = *s.union_index_->local_of(p.ids[a]);
    s.piece_to_union_.push_back(std::move(map));
  }
  s.pieces_ = std::move(pieces);
  return s;
}

std::vector<double> PiecewiseSet::restrict_to_piece(std::span<const double> union_values, std::size_t i) const {
  require(union_values.size() == union_ids().size(), ErrorKind::InvalidParameter,
          "function must have one value per point of S");
  std::vector<double> out(piece_to_union_[i].size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = union_values[piece_to_union_[i][a]];
  return out;
}

void PiecewiseSet::check_trace_exponent(double p) const {
  require(theta_S() < p, ErrorKind::ParameterError, "theta_N must be below p");
}

std::vector<double> default_r_grid(const Space& space) {
  std::vector<double> g;
  const double stop = 4.0 * space.scale_floor() * (1.0 - kBallSlack);
  for (int k = 0; dyadic(k) >= stop; ++k) g.push_back(dyadic(k));
  return g;
}

namespace {

void check_grid(const Space& space, std::span<const double> r_grid, double floor_factor = 2.0) {
  require(!r_grid.empty(), ErrorKind::InvalidGrid, "empty radius grid");
  const double lo = floor_factor * space.scale_floor() * (1.0 - kBallSlack);
  for (double r : r_grid)
    require(r >= lo && r <= 1.0 * (1.0 + kBallSlack), ErrorKind::InvalidGrid,
            "radius " + std::to_string(r) + " outside the admissible scale range");
}

std::vector<PointId> sorted_subset(const Space& space, std::span<const PointId> ids) {
  std::vector<PointId> s(ids.begin(), ids.end());
  for (auto id : s) space.check_id(id);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  require(!s.empty(), ErrorKind::EmptySet, "empty subset");
  return s;
}

}  // namespace

AdrReport check_adr(const Space& space, const SubsetPiece& piece, std::span<const double> r_grid) {
  check_grid(space, r_grid);
  require(!piece.ids.empty(), ErrorKind::EmptySet, "empty piece");
  const PointIndex idx(space, piece.ids);
  AdrReport rep;
  rep.kappa1 = std::numeric_limits<double>::infinity();
  rep.kappa2 = 0.0;
  const std::size_t n = piece.ids.size();
  for (double r : r_grid) {
    std::vector<double> ratio(n);
    const double rt = std::pow(r, piece.theta);
#pragma omp parallel
    {
      std::vector<std::uint32_t> local;
#pragma omp for schedule(dynamic, 16)
      for (std::int64_t a = 0; a < static_cast<std::int64_t>(n); ++a) {
        const Ball b = Ball::at(piece.ids[static_cast<std::size_t>(a)], r);
        idx.query(b, local);
        double h = 0.0;
        for (auto l : local) h += piece.weights[l];
        ratio[static_cast<std::size_t>(a)] = h * rt / space.fast_mu(b);
      }
    }
    const auto [mn, mx] = std::minmax_element(ratio.begin(), ratio.end());
    rep.r.push_back(r);
    rep.kappa1_per_r.push_back(*mn);
    rep.kappa2_per_r.push_back(*mx);
    rep.kappa1 = std::min(rep.kappa1, *mn);
    rep.kappa2 = std::max(rep.kappa2, *mx);
  }
  rep.ok = std::isfinite(rep.kappa1) && std::isfinite(rep.kappa2) && rep.kappa1 > 0.0 && rep.kappa2 > 0.0;
  return rep;
}

LcrReport check_lcr(const Space& space, std::span<const PointId> subset_ids, double theta,
                    std::span<const double> r_grid) {
  check_grid(space, r_grid);
  const auto subset = sorted_subset(space, subset_ids);
  const PointIndex idx(space, subset);
  LcrReport rep;
  rep.lambda = std::numeric_limits<double>::infinity();
  for (double r : r_grid) {
    const int k = std::min(k_of_r(r) + 1, std::max(space.max_scale(), 0));
    const auto net = separated_net(space, subset, k, true);
    std::vector<double> lam(net.points.size());
#pragma omp parallel
    {
      std::vector<std::uint32_t> local;
#pragma omp for schedule(dynamic, 1)
      for (std::int64_t a = 0; a < static_cast<std::int64_t>(net.points.size()); ++a) {
        const Ball b = Ball::at(net.points[static_cast<std::size_t>(a)], r);
        idx.query(b, local);
        ContentQuery q;
        q.theta = theta;
        q.delta = r;
        for (auto l : local) q.target.push_back(subset[l]);
        lam[static_cast<std::size_t>(a)] = hausdorff_content(space, q).value * std::pow(r, theta) / space.fast_mu(b);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < lam.size(); ++a) {
      best = std::min(best, lam[a]);
      if (lam[a] < rep.lambda) {
        rep.lambda = lam[a];
        rep.argmin_point = net.points[a];
        rep.argmin_radius = r;
      }
    }
    rep.r.push_back(r);
    rep.lambda_per_r.push_back(best);
  }
  return rep;
}

PorosityReport porosity_scan(const Space& space, std::span<const PointId> subset_ids, double sigma,
                             std::span<const double> r_grid) {
  require(sigma > 0.0 && sigma <= 1.0, ErrorKind::InvalidParameter, "sigma must lie in (0, 1]");
  check_grid(space, r_grid, 1.0);
  PorosityReport rep;
  rep.sigma = sigma;
  rep.subset = sorted_subset(space, subset_ids);
  rep.r_grid.assign(r_grid.begin(), r_grid.end());
  const PointIndex s_idx(space, rep.subset);

  // Distance from every space point to S, computed once.
  std::vector<double> dist_s(space.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(space.size()); ++c)
    dist_s[static_cast<std::size_t>(c)] = s_idx.nearest_distance(Ball::at(static_cast<PointId>(c), 0.0));

  rep.is_porous = true;
  for (double r : r_grid) {
    const double thr = std::max(sigma * r - space.resolution(), 0.0);
    std::vector<PointId> centers;
    for (PointId c = 0; c < space.size(); ++c)
      if (dist_s[c] > thr * (1.0 + kBallSlack)) centers.push_back(c);
    std::vector<char> mask(rep.subset.size(), 0);
    if (!centers.empty()) {
      const PointIndex c_idx(space, std::move(centers));
#pragma omp parallel for schedule(dynamic, 64)
      for (std::int64_t a = 0; a < static_cast<std::int64_t>(rep.subset.size()); ++a)
        mask[static_cast<std::size_t>(a)] =
            c_idx.any_within(Ball::at(rep.subset[static_cast<std::size_t>(a)], (1.0 - sigma) * r)) ? 1 : 0;
    }
    const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    rep.is_porous = rep.is_porous && count == rep.subset.size();
    rep.porous_count_per_scale.push_back(count);
    rep.porous_points_per_scale.push_back(std::move(mask));
  }
  return rep;
}

double porosity_sigma_estimate(const Space& space, std::span<const PointId> subset_ids,
                               std::span<const double> r_grid, double min_sigma) {
  // Candidates 1, 3/4, 1/2, 3/8, 1/4, ... ; S_r(sigma) shrinks as sigma grows.
  for (double base = 1.0; base >= min_sigma; base /= 2.0)
    for (double s : {base, 0.75 * base})
      if (s >= min_sigma && porosity_scan(space, subset_ids, s, r_grid).is_porous) return s;
  return 0.0;
}

double porosity_product_sigma(std::span<const double> sigmas) {
  require(!sigmas.empty(), ErrorKind::InvalidParameter, "empty sigma list");
  double s = 1.0;
  for (double v : sigmas) {
    require(v > 0.0 && v <= 1.0, ErrorKind::InvalidParameter, "each sigma must lie in (0, 1]");
    s *= 2.0 * v / 3.0;
  }
  return s;
}

nlohmann::json to_json(const AdrReport& r) {
  return {{"kappa1", r.kappa1}, {"kappa2", r.kappa2}, {"ok", r.ok}, {"r", r.r},
          {"kappa1_per_r", r.kappa1_per_r}, {"kappa2_per_r", r.kappa2_per_r}};
}

nlohmann::json to_json(const LcrReport& r) {
  return {{"lambda", r.lambda}, {"r", r.r}, {"lambda_per_r", r.lambda_per_r},
          {"argmin_point", r.argmin_point}, {"argmin_radius", r.argmin_radius}};
}

nlohmann::json to_json(const PorosityReport& r) {
  return {{"sigma", r.sigma}, {"r", r.r_grid}, {"porous_count", r.porous_count_per_scale},
          {"points", r.subset.size()}, {"ok", r.is_porous}};
}

}  // namespace mmtrace
