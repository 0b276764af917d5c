#include "mmtrace/space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace mmtrace {

namespace detail {

struct SpaceData {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<double> packed;  // strict lower triangle
  std::vector<double> weights;
  double resolution = 0.0;
  double c_res = 1.0;
  double total_mass = 0.0;
  double diameter = 0.0;

  double dist(PointId a, PointId b) const {
    if (a == b) return 0.0;
    if (!packed.empty()) {
      if (a < b) std::swap(a, b);
      return packed[a * (a - 1) / 2 + b];
    }
    double s = 0.0;
    const double* pa = coords.data() + a * dim;
    const double* pb = coords.data() + b * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      const double t = pa[i] - pb[i];
      s += t * t;
    }
    return std::sqrt(s);
  }
};

}  // namespace detail

double dyadic(int k) { return std::ldexp(1.0, -k); }

int k_of_r(double r) {
  require(r > 0.0 && std::isfinite(r), ErrorKind::InvalidScale, "radius must be positive and finite");
  int e = 0;
  const double m = std::frexp(r, &e);  // r = m 2^e, m in [1/2, 1)
  return m == 0.5 ? 1 - e : -e;
}

namespace {

void finish_setup(detail::SpaceData& d) {
  require(d.n > 0, ErrorKind::EmptySet, "space has no points");
  require(d.weights.size() == d.n, ErrorKind::InvalidParameter, "one weight per point required");
  require(d.resolution > 0.0 && std::isfinite(d.resolution), ErrorKind::InvalidParameter,
          "resolution must be positive");
  require(d.c_res >= 1.0, ErrorKind::InvalidParameter, "scale floor multiplier must be >= 1");
  double total = 0.0;
  for (double w : d.weights) {
    require(w > 0.0 && std::isfinite(w), ErrorKind::InvalidParameter, "weights must be positive and finite");
    total += w;
  }
  d.total_mass = total;

  if (!d.packed.empty() || d.n <= 4096) {
    double diam = 0.0;
    for (PointId a = 0; a < d.n; ++a)
      for (PointId b = 0; b < a; ++b) diam = std::max(diam, d.dist(a, b));
    d.diameter = diam;
  } else {
    double s = 0.0;
    for (std::size_t ax = 0; ax < d.dim; ++ax) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (PointId i = 0; i < d.n; ++i) {
        lo = std::min(lo, d.coords[i * d.dim + ax]);
        hi = std::max(hi, d.coords[i * d.dim + ax]);
      }
      s += (hi - lo) * (hi - lo);
    }
    d.diameter = std::sqrt(s);
  }
}

}  // namespace

Space Space::from_coords(std::size_t dim, std::vector<double> coords, std::vector<double> weights,
                         double resolution, double c_res) {
  require(dim > 0, ErrorKind::InvalidParameter, "dimension must be positive");
  require(coords.size() % dim == 0, ErrorKind::InvalidParameter, "coordinate array size not a multiple of dim");
  for (double c : coords) require(std::isfinite(c), ErrorKind::InvalidParameter, "non-finite coordinate");
  auto d = std::make_shared<detail::SpaceData>();
  d->n = coords.size() / dim;
  d->dim = dim;
  d->coords = std::move(coords);
  d->weights = std::move(weights);
  d->resolution = resolution;
  d->c_res = c_res;
  finish_setup(*d);
  Space s;
  s.d_ = std::move(d);
  std::vector<PointId> all(s.size());
  std::iota(all.begin(), all.end(), PointId{0});
  s.full_ = std::make_shared<PointIndex>(s, std::move(all));
  s.full_cells_ = std::make_shared<const std::vector<double>>(s.full_->cell_masses(s.weights()));
  return s;
}

Space Space::from_matrix(std::size_t n, std::vector<double> distances, std::vector<double> weights,
                         double resolution, double c_res) {
  require(n > 0, ErrorKind::EmptySet, "space has no points");
  require(n <= 20000, ErrorKind::InvalidParameter, "matrix metric limited to 2e4 points");
  const std::size_t packed_len = n * (n - 1) / 2;
  std::vector<double> packed;
  if (distances.size() == n * n) {
    // Symmetry and zero diagonal are checked on a seeded sample of entries.
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t samples = std::min<std::size_t>(n * n, 100000);
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t a = n * n <= 100000 ? s / n : pick(rng);
      const std::size_t b = n * n <= 100000 ? s % n : pick(rng);
      const double ab = distances[a * n + b];
      require(ab == distances[b * n + a], ErrorKind::InvalidParameter, "distance matrix is not symmetric");
      if (a == b) require(ab == 0.0, ErrorKind::InvalidParameter, "distance matrix diagonal must be zero");
    }
    packed.resize(packed_len);
    for (std::size_t a = 1; a < n; ++a)
      for (std::size_t b = 0; b < a; ++b) packed[a * (a - 1) / 2 + b] = distances[a * n + b];
  } else {
    require(distances.size() == packed_len, ErrorKind::InvalidParameter,
            "distance array must be n*n or n*(n-1)/2 long");
    packed = std::move(distances);
  }
  for (double v : packed)
    require(v > 0.0 && std::isfinite(v), ErrorKind::InvalidParameter,
            "off-diagonal distances must be positive and finite");
  if (n == 1) packed.clear();

  auto d = std::make_shared<detail::SpaceData>();
  d->n = n;
  d->dim = 0;
  d->packed = std::move(packed);
  d->weights = std::move(weights);
  d->resolution = resolution;
  d->c_res = c_res;
  finish_setup(*d);
  Space s;
  s.d_ = std::move(d);
  std::vector<PointId> all(n);
  std::iota(all.begin(), all.end(), PointId{0});
  s.full_ = std::make_shared<PointIndex>(s, std::move(all));
  s.full_cells_ = std::make_shared<const std::vector<double>>(s.full_->cell_masses(s.weights()));
  return s;
}

std::size_t Space::size() const { return d_->n; }
std::size_t Space::dim() const { return d_->dim; }
bool Space::has_coords() const { return d_->dim > 0; }
bool Space::has_matrix() const { return d_->dim == 0; }
double Space::weight(PointId i) const { return d_->weights[i]; }
std::span<const double> Space::weights() const { return d_->weights; }
std::span<const double> Space::coords(PointId i) const {
  return std::span<const double>(d_->coords).subspan(i * d_->dim, d_->dim);
}
std::span<const double> Space::all_coords() const { return d_->coords; }
std::span<const double> Space::packed_matrix() const { return d_->packed; }
double Space::resolution() const { return d_->resolution; }
double Space::scale_floor() const { return d_->c_res * d_->resolution; }
double Space::c_res() const { return d_->c_res; }
double Space::total_mass() const { return d_->total_mass; }
double Space::diameter() const { return d_->diameter; }
double Space::distance(PointId a, PointId b) const { return d_->dist(a, b); }

double Space::distance_to(std::span<const double> c, PointId b) const {
  double s = 0.0;
  const double* pb = d_->coords.data() + b * d_->dim;
  for (std::size_t i = 0; i < d_->dim; ++i) {
    const double t = c[i] - pb[i];
    s += t * t;
  }
  return std::sqrt(s);
}

int Space::max_scale() const {
  const double floor = scale_floor();
  if (floor > 1.0) return -1;
  int k = 0;
  while (dyadic(k + 1) >= floor * (1.0 - kBallSlack)) ++k;
  return k;
}

const PointIndex& Space::index() const {
  require(full_ != nullptr, ErrorKind::InvalidParameter, "space view without an index");
  return *full_;
}

double Space::fast_mu(const Ball& ball) const { return index().fast_mass(ball, weights(), *full_cells_); }

void Space::check_id(PointId i) const {
  require(i < d_->n, ErrorKind::InvalidPoint, "point id " + std::to_string(i) + " out of range");
}

// ---------------------------------------------------------------- PointIndex

PointIndex::PointIndex(const Space& space, std::vector<PointId> members)
    : space_(space), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (PointId id : members_) space_.check_id(id);
  local_lookup_.assign(space_.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t i = 0; i < members_.size(); ++i) local_lookup_[members_[i]] = static_cast<std::uint32_t>(i);

  dim_ = space_.dim();
  if (!space_.has_coords() || dim_ > 3 || members_.empty()) return;
  gridded_ = true;

  origin_.assign(dim_, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
  for (PointId id : members_) {
    auto c = space_.coords(id);
    for (std::size_t a = 0; a < dim_; ++a) {
      origin_[a] = std::min(origin_[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  cell_ = space_.resolution();
  auto count_cells = [&] {
    extent_.assign(dim_, 1);
    double total = 1.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      extent_[a] = static_cast<std::int64_t>(std::floor((hi[a] - origin_[a]) / cell_)) + 1;
      total *= static_cast<double>(extent_[a]);
    }
    return total;
  };
  while (count_cells() > 8.0 * static_cast<double>(members_.size()) + 64.0) cell_ *= 2.0;

  std::size_t ncells = 1;
  for (auto e : extent_) ncells *= static_cast<std::size_t>(e);
  std::vector<std::uint32_t> cell_of(members_.size());
  std::vector<std::uint32_t> counts(ncells + 1, 0);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    auto c = space_.coords(members_[i]);
    std::size_t lin = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
      auto idx = static_cast<std::int64_t>(std::floor((c[a] - origin_[a]) / cell_));
      idx = std::clamp<std::int64_t>(idx, 0, extent_[a] - 1);
      lin = lin * static_cast<std::size_t>(extent_[a]) + static_cast<std::size_t>(idx);
    }
    cell_of[i] = static_cast<std::uint32_t>(lin);
    ++counts[lin + 1];
  }
  for (std::size_t c = 0; c < ncells; ++c) counts[c + 1] += counts[c];
  cell_start_ = counts;
  cell_items_.resize(members_.size());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < members_.size(); ++i) cell_items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
}

std::optional<std::uint32_t> PointIndex::local_of(PointId id) const {
  if (id >= local_lookup_.size()) return std::nullopt;
  const auto v = local_lookup_[id];
  if (v == std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
  return v;
}

std::vector<double> PointIndex::center_coords(const Ball& ball, PointId& id_out, bool& by_id) const {
  by_id = ball.centered_on_point();
  if (by_id) {
    id_out = ball.center_id();
    space_.check_id(id_out);
    if (!space_.has_coords()) return {};
    auto c = space_.coords(id_out);
    return {c.begin(), c.end()};
  }
  require(space_.has_coords(), ErrorKind::InvalidPoint, "free-standing centers need a coordinate metric");
  const auto& c = std::get<std::vector<double>>(ball.center);
  require(c.size() == space_.dim(), ErrorKind::InvalidPoint, "center dimension mismatch");
  return c;
}

double PointIndex::dist_from(const Ball& ball, std::span<const double> c, PointId member) const {
  if (ball.centered_on_point()) return space_.distance(ball.center_id(), member);
  return space_.distance_to(c, member);
}

template <typename Visit>
void PointIndex::visit_cells(std::span<const double> c, double r, Visit&& visit) const {
  std::int64_t lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0}, ext[3] = {1, 1, 1};
  for (std::size_t a = 0; a < dim_; ++a) {
    ext[a] = extent_[a];
    const double l = (c[a] - r - origin_[a]) / cell_ - 1e-7;
    const double h = (c[a] + r - origin_[a]) / cell_ + 1e-7;
    if (h < 0.0 || l > static_cast<double>(extent_[a] - 1) + 1.0) return;
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(l)));
    hi[a] = std::min<std::int64_t>(extent_[a] - 1, static_cast<std::int64_t>(std::floor(h)));
    if (lo[a] > hi[a]) return;
  }
  for (std::int64_t i = lo[0]; i <= hi[0]; ++i)
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
      for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
        const std::size_t lin = static_cast<std::size_t>((i * ext[1] + j) * ext[2] + k);
        const std::int64_t cell_idx[3] = {i, j, k};
        visit(lin, cell_idx);
      }
}

void PointIndex::query(const Ball& ball, std::vector<std::uint32_t>& out) const {
  out.clear();
  require(ball.radius >= 0.0, ErrorKind::InvalidParameter, "negative radius");
  PointId cid = 0;
  bool by_id = false;
  const auto c = center_coords(ball, cid, by_id);
  if (!gridded_) {
    for (std::size_t i = 0; i < members_.size(); ++i)
      if (within(dist_from(ball, c, members_[i]), ball.radius)) out.push_back(static_cast<std::uint32_t>(i));
    return;
  }
  visit_cells(c, ball.radius, [&](std::size_t lin, const std::int64_t*) {
    for (auto p = cell_start_[lin]; p < cell_start_[lin + 1]; ++p) {
      const auto li = cell_items_[p];
      if (within(dist_from(ball, c, members_[li]), ball.radius)) out.push_back(li);
    }
  });
  std::sort(out.begin(), out.end());
}

std::vector<std::uint32_t> PointIndex::query(const Ball& ball) const {
  std::vector<std::uint32_t> out;
  query(ball, out);
  return out;
}

bool PointIndex::any_within(const Ball& ball) const {
  PointId cid = 0;
  bool by_id = false;
  const auto c = center_coords(ball, cid, by_id);
  if (by_id && local_of(cid)) return true;
  if (!gridded_) {
    for (PointId m : members_)
      if (within(dist_from(ball, c, m), ball.radius)) return true;
    return false;
  }
  bool found = false;
  visit_cells(c, ball.radius, [&](std::size_t lin, const std::int64_t*) {
    if (found) return;
    for (auto p = cell_start_[lin]; p < cell_start_[lin + 1]; ++p)
      if (within(dist_from(ball, c, members_[cell_items_[p]]), ball.radius)) {
        found = true;
        return;
      }
  });
  return found;
}

double PointIndex::nearest_distance(const Ball& center_only) const {
  if (members_.empty()) return std::numeric_limits<double>::infinity();
  PointId cid = 0;
  bool by_id = false;
  const auto c = center_coords(center_only, cid, by_id);
  if (by_id && local_of(cid)) return 0.0;
  if (!gridded_) {
    double best = std::numeric_limits<double>::infinity();
    for (PointId m : members_) best = std::min(best, dist_from(center_only, c, m));
    return best;
  }
  // Expanding search: any hit within radius r bounds the answer by r, so
  // one more pass at that radius is exact.
  double r = cell_;
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    visit_cells(c, r, [&](std::size_t lin, const std::int64_t*) {
      for (auto p = cell_start_[lin]; p < cell_start_[lin + 1]; ++p)
        best = std::min(best, dist_from(center_only, c, members_[cell_items_[p]]));
    });
    if (best <= r) return best;
    if (std::isfinite(best)) {
      double exact = best;
      visit_cells(c, best, [&](std::size_t lin, const std::int64_t*) {
        for (auto p = cell_start_[lin]; p < cell_start_[lin + 1]; ++p)
          exact = std::min(exact, dist_from(center_only, c, members_[cell_items_[p]]));
      });
      return exact;
    }
    r *= 2.0;
  }
}

std::vector<double> PointIndex::cell_masses(std::span<const double> local_weights) const {
  if (!gridded_) return {};
  std::vector<double> out(cell_start_.size() - 1, 0.0);
  for (std::size_t c = 0; c + 1 < cell_start_.size(); ++c) {
    double s = 0.0;
    for (auto p = cell_start_[c]; p < cell_start_[c + 1]; ++p) s += local_weights[cell_items_[p]];
    out[c] = s;
  }
  return out;
}

double PointIndex::fast_mass(const Ball& ball, std::span<const double> local_weights,
                             std::span<const double> cell_masses) const {
  PointId cid = 0;
  bool by_id = false;
  const auto c = center_coords(ball, cid, by_id);
  double total = 0.0;
  if (!gridded_) {
    for (std::size_t i = 0; i < members_.size(); ++i)
      if (within(dist_from(ball, c, members_[i]), ball.radius)) total += local_weights[i];
    return total;
  }
  visit_cells(c, ball.radius, [&](std::size_t lin, const std::int64_t* idx) {
    if (cell_start_[lin] == cell_start_[lin + 1]) return;
    double far = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      const double lo = origin_[a] + static_cast<double>(idx[a]) * cell_;
      const double t = std::max(std::abs(c[a] - lo), std::abs(c[a] - (lo + cell_)));
      far += t * t;
    }
    if (std::sqrt(far) <= ball.radius) {
      total += cell_masses[lin];
      return;
    }
    for (auto p = cell_start_[lin]; p < cell_start_[lin + 1]; ++p) {
      const auto li = cell_items_[p];
      if (within(dist_from(ball, c, members_[li]), ball.radius)) total += local_weights[li];
    }
  });
  return total;
}

// ---------------------------------------------------------------- operations

std::vector<PointId> ball_members(const Space& space, const Ball& ball) {
  require(ball.radius >= 0.0, ErrorKind::InvalidParameter, "radius must be nonnegative");
  const auto local = space.index().query(ball);
  return {local.begin(), local.end()};
}

double mu_ball(const Space& space, const Ball& ball) {
  require(ball.radius >= 0.0, ErrorKind::InvalidParameter, "radius must be nonnegative");
  std::vector<std::uint32_t> local;
  space.index().query(ball, local);
  double s = 0.0;
  for (auto i : local) s += space.weight(i);
  return s;
}

SeparatedNet separated_net(const Space& space, std::span<const PointId> subset_ids, int k, bool maximal) {
  require(!subset_ids.empty(), ErrorKind::EmptySet, "net of an empty subset");
  const double sep = dyadic(k);
  require(sep >= space.scale_floor() * (1.0 - kBallSlack), ErrorKind::ResolutionError,
          "net separation below the scale floor");
  for (PointId id : subset_ids) space.check_id(id);
  std::vector<PointId> order(subset_ids.begin(), subset_ids.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  const double gap = maximal ? sep : 2.0 * sep;
  SeparatedNet net;
  net.scale_k = k;
  net.separation = sep;
  net.maximal = maximal;
  // Chosen points are bucketed on a coarse grid (coordinate spaces) so the
  // separation test only touches nearby candidates.
  if (space.has_coords() && space.dim() <= 3) {
    std::map<std::array<std::int64_t, 3>, std::vector<PointId>> buckets;
    auto key_of = [&](PointId id) {
      std::array<std::int64_t, 3> key{0, 0, 0};
      auto c = space.coords(id);
      for (std::size_t a = 0; a < space.dim(); ++a) key[a] = static_cast<std::int64_t>(std::floor(c[a] / gap));
      return key;
    };
    for (PointId id : order) {
      const auto key = key_of(id);
      bool ok = true;
      for (std::int64_t di = -1; di <= 1 && ok; ++di)
        for (std::int64_t dj = -1; dj <= 1 && ok; ++dj)
          for (std::int64_t dk = -1; dk <= 1 && ok; ++dk) {
            if ((space.dim() < 2 && dj != 0) || (space.dim() < 3 && dk != 0)) continue;
            auto it = buckets.find({key[0] + di, key[1] + dj, key[2] + dk});
            if (it == buckets.end()) continue;
            for (PointId q : it->second)
              if (space.distance(id, q) < gap * (1.0 - kBallSlack)) {
                ok = false;
                break;
              }
          }
      if (ok) {
        buckets[key].push_back(id);
        net.points.push_back(id);
      }
    }
  } else {
    for (PointId id : order) {
      bool ok = true;
      for (PointId q : net.points)
        if (space.distance(id, q) < gap * (1.0 - kBallSlack)) {
          ok = false;
          break;
        }
      if (ok) net.points.push_back(id);
    }
  }
  net.index_set.resize(net.points.size());
  std::iota(net.index_set.begin(), net.index_set.end(), std::size_t{0});
  return net;
}

std::size_t covering_multiplicity(const Space& space, std::span<const Ball> balls) {
  std::vector<std::uint32_t> count(space.size(), 0);
  std::vector<std::uint32_t> local;
  for (const auto& b : balls) {
    space.index().query(b, local);
    for (auto i : local) ++count[i];
  }
  std::uint32_t best = 0;
  for (auto c : count) best = std::max(best, c);
  return best;
}

namespace {

// Dyadic radii 2^{-j} inside [scale_floor, R], largest first.
std::vector<double> dyadic_radii(const Space& space, double R) {
  std::vector<double> radii;
  const double floor = space.scale_floor() * (1.0 - kBallSlack);
  int j = k_of_r(R);
  if (dyadic(j) > R * (1.0 + kBallSlack)) ++j;
  for (; dyadic(j) >= floor; ++j) radii.push_back(dyadic(j));
  return radii;
}

}  // namespace

DoublingReport doubling_constant(const Space& space, double R) {
  require(R > 0.0, ErrorKind::InvalidScale, "R must be positive");
  DoublingReport rep;
  if (space.size() == 1) return rep;
  const auto radii = dyadic_radii(space, R);
  require(!radii.empty(), ErrorKind::ResolutionError, "no dyadic radius between the scale floor and R");
  const auto& idx = space.index();
  const auto cells = idx.cell_masses(space.weights());
  rep.value = 0.0;
  for (double r : radii) {
    std::vector<double> ratio(space.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t x = 0; x < static_cast<std::int64_t>(space.size()); ++x) {
      const auto id = static_cast<PointId>(x);
      const double small = idx.fast_mass(Ball::at(id, r), space.weights(), cells);
      const double big = idx.fast_mass(Ball::at(id, 2.0 * r), space.weights(), cells);
      ratio[id] = big / small;
    }
    for (PointId x = 0; x < space.size(); ++x)
      if (ratio[x] > rep.value) {
        rep.value = ratio[x];
        rep.argmax_point = x;
        rep.argmax_radius = r;
      }
  }
  return rep;
}

DecayReport decay_exponents(const Space& space, double R) {
  require(R > 0.0, ErrorKind::InvalidScale, "R must be positive");
  const auto radii = dyadic_radii(space, R);
  const auto& idx = space.index();
  const auto cells = idx.cell_masses(space.weights());
  const std::size_t nr = radii.size();
  std::vector<double> mass(space.size() * nr);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t x = 0; x < static_cast<std::int64_t>(space.size()); ++x)
    for (std::size_t j = 0; j < nr; ++j)
      mass[static_cast<std::size_t>(x) * nr + j] =
          idx.fast_mass(Ball::at(static_cast<PointId>(x), radii[j]), space.weights(), cells);

  // Envelopes of y = log(mu_small / mu_big) per ratio t = log(r_small / r_big).
  struct Env {
    double t;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
  };
  std::vector<Env> env;
  DecayReport rep;
  for (std::size_t b = 0; b < nr; ++b)
    for (std::size_t s = b + 1; s < nr; ++s) {
      const double t = std::log(radii[s] / radii[b]);
      auto it = std::find_if(env.begin(), env.end(), [&](const Env& e) { return std::abs(e.t - t) < 1e-9; });
      if (it == env.end()) {
        env.push_back(Env{t});
        it = env.end() - 1;
      }
      for (PointId x = 0; x < space.size(); ++x) {
        const double y = std::log(mass[x * nr + s] / mass[x * nr + b]);
        it->lo = std::min(it->lo, y);
        it->hi = std::max(it->hi, y);
        ++rep.pairs;
      }
    }
  require(rep.pairs >= 10, ErrorKind::InsufficientData, "fewer than 10 nested ball pairs");

  auto fit = [&](auto pick, double& resid) {
    // Least squares with intercept when at least two ratios exist,
    // through the origin otherwise.
    const double n = static_cast<double>(env.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& e : env) {
      const double y = pick(e);
      st += e.t;
      sy += y;
      stt += e.t * e.t;
      sty += e.t * y;
    }
    double slope = 0.0, icpt = 0.0;
    const double den = n * stt - st * st;
    if (env.size() >= 2 && std::abs(den) > 1e-12 * n * stt) {
      slope = (n * sty - st * sy) / den;
      icpt = (sy - slope * st) / n;
    } else {
      slope = sty / stt;
    }
    double r2 = 0.0;
    for (const auto& e : env) {
      const double d = pick(e) - (slope * e.t + icpt);
      r2 += d * d;
    }
    resid = std::sqrt(r2 / n);
    return slope;
  };
  rep.Q_est = fit([](const Env& e) { return e.lo; }, rep.residual_Q);
  rep.q_est = fit([](const Env& e) { return e.hi; }, rep.residual_q);
  // The reverse exponent never exceeds the forward one.
  rep.q_est = std::min(rep.q_est, rep.Q_est);

  for (const auto& e : env) {
    rep.C_Q = std::max(rep.C_Q, std::exp(rep.Q_est * e.t - e.lo));
    rep.C_q = std::max(rep.C_q, std::exp(e.hi - rep.q_est * e.t));
  }
  return rep;
}

}  // namespace mmtrace
