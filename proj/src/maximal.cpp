#include <algorithm>
#include <cmath>

#include "mmtrace/functionals.hpp"
#include "mmtrace/kernels.hpp"

namespace mmtrace {

namespace {

void check_union_function(const MeasureSequence& seq, std::span<const double> f) {
  require(f.size() == seq.ids().size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
}

double lp_m0(const MeasureSequence& seq, std::span<const double> f, double p) {
  double s = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u) s += std::pow(std::abs(f[u]), p) * seq.weights_per_k[0][u];
  return std::pow(s, 1.0 / p);
}

}  // namespace

double tilde_e(const MeasureSequence& seq, std::span<const double> f, int k, PointId x, double r) {
  check_union_function(seq, f);
  require(k >= 0 && k <= seq.k_max, ErrorKind::InvalidParameter, "scale index outside the sequence");
  if (!seq.support->any_within(Ball::at(x, r))) return 0.0;
  return local_stats(f, seq.support->query(Ball::at(x, 2.0 * r)), seq.weights(k)).best_dev;
}

std::vector<double> calderon_maximal(const MeasureSequence& seq, std::span<const double> f,
                                     std::span<const PointId> points) {
  check_union_function(seq, f);
  for (auto x : points) seq.space().check_id(x);
  std::vector<double> out(points.size(), 0.0);
  const PointIndex& sup = *seq.support;
#pragma omp parallel
  {
    std::vector<std::uint32_t> local;
    StatsWorkspace ws;
#pragma omp for schedule(dynamic, 32)
    for (std::int64_t a = 0; a < static_cast<std::int64_t>(points.size()); ++a) {
      const PointId x = points[static_cast<std::size_t>(a)];
      double best = 0.0;
      for (int j = 0; j <= seq.k_max; ++j) {
        const double r = dyadic(j);
        if (!sup.any_within(Ball::at(x, r))) continue;
        sup.query(Ball::at(x, 2.0 * r), local);
        best = std::max(best, ws.compute(f, local, seq.weights(j)).best_dev / r);
      }
      out[static_cast<std::size_t>(a)] = best;
    }
  }
  return out;
}

FunctionalReport bn_functional(const MeasureSequence& seq, const PiecewiseSet& s, std::span<const double> f, double p,
                               double sigma, std::optional<double> c) {
  check_union_function(seq, f);
  require(p > 1.0 && std::isfinite(p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  require(seq.k_max >= 1, ErrorKind::ResolutionError, "sequence needs k_max >= 1");
  const Space& space = seq.space();
  const auto& ids = seq.ids();
  FunctionalReport r;
  r.name = "bn";
  r.params = {{"p", p}, {"sigma", sigma}, {"theta", seq.theta}, {"k_max", seq.k_max}};
  if (c) {
    r.params["c"] = *c;
    const double eps = seq.epsilon;
    if (!(*c >= 3.0 / eps)) r.notes.push_back("c below 3/eps");
    if (!(sigma > 0.0 && sigma < eps * eps / (4.0 * *c))) r.notes.push_back("sigma outside (0, eps^2/(4c))");
  }

  const double lp = lp_m0(seq, f, p);

  const auto sharp = calderon_maximal(seq, f, ids);
  double sharp_sum = 0.0, mu_s = 0.0;
  for (std::size_t u = 0; u < ids.size(); ++u) {
    sharp_sum += std::pow(sharp[u], p) * space.weight(ids[u]);
    mu_s += space.weight(ids[u]);
  }
  if (s.piece(0).theta > 0.0) r.notes.push_back("mu(S) = 0 in the continuum; the sharp part is a mesh-scale proxy");

  std::vector<double> grid;
  for (int k = 1; k <= seq.k_max; ++k) grid.push_back(dyadic(k));
  const auto por = porosity_scan(space, ids, sigma, grid);

  double scale = 0.0, last = 0.0;
  for (int k = 1; k <= seq.k_max; ++k) {
    const auto& mask = por.porous_points_per_scale[static_cast<std::size_t>(k - 1)];
    std::vector<PointId> centers;
    std::vector<std::size_t> where;
    for (std::size_t u = 0; u < ids.size(); ++u)
      if (mask[u]) {
        centers.push_back(ids[u]);
        where.push_back(u);
      }
    const auto& w = seq.weights(k);
    const auto st = kernels::ball_stats(*seq.support, f, w, centers, dyadic(k));
    double t = 0.0;
    for (std::size_t a = 0; a < st.size(); ++a) t += std::pow(st[a].best_dev, p) * w[where[a]];
    t *= std::exp2(-k * (seq.theta - p));
    scale += t;
    last = t;
  }
  const double sharp_part = std::pow(sharp_sum, 1.0 / p);
  const double scale_part = std::pow(scale, 1.0 / p);
  r.parts = {{"lp", lp}, {"sharp", sharp_part}, {"scale_sum", scale_part}, {"mu_S", mu_s}};
  r.value = lp + sharp_part + scale_part;
  r.truncation_tail = last;
  return r;
}

std::vector<double> sharp_mu_s1(const Space& space, const PiecewiseSet& s, std::span<const double> f,
                                ScaleOptions opt) {
  require(s.piece(0).theta == 0.0, ErrorKind::ParameterError, "sharp function of mu|S^1 needs theta_1 = 0");
  require(f.size() == s.union_ids().size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
  const int K = resolve_k_max(space, opt);
  const auto f1 = s.restrict_to_piece(f, 0);
  std::vector<double> mu1;
  for (auto id : s.piece(0).ids) mu1.push_back(space.weight(id));
  const auto& ids = s.union_ids();
  std::vector<double> out(ids.size(), 0.0);
  for (int j = -1; j <= K; ++j) {
    const auto st = kernels::ball_stats(s.piece_index(0), f1, mu1, ids, dyadic(j));
    for (std::size_t u = 0; u < ids.size(); ++u) out[u] = std::max(out[u], st[u].best_dev);
  }
  return out;
}

Expansion combinatorial_expand(const Space& space, const PiecewiseSet& s, PointId center, int k, double c) {
  space.check_id(center);
  require(c >= 1.0, ErrorKind::InvalidParameter, "c must be >= 1");
  const double rk = dyadic(k);
  auto meets = [&](std::size_t i, double factor) { return s.piece_index(i).any_within(Ball::at(center, factor * rk)); };
  bool any = false;
  for (std::size_t i = 0; i < s.N(); ++i) any = any || meets(i, c);
  require(any, ErrorKind::InvalidParameter, "cB must meet S");

  for (int l = 0;; ++l) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < s.N(); ++i)
      if (meets(i, c + l)) in.push_back(i);
    bool new_piece = false;
    for (std::size_t j = 0; j < s.N() && !new_piece; ++j)
      if (std::find(in.begin(), in.end(), j) == in.end() && meets(j, c + l + 1)) new_piece = true;
    if (new_piece) continue;
    Expansion e;
    e.index_set = in;
    e.i_bar = l + 1;
    std::vector<std::uint32_t> local;
    for (auto i : in) {
      // Nearest point of S^i to the center, lowest id on ties.
      s.piece_index(i).query(Ball::at(center, (c + l) * rk), local);
      PointId best = s.piece(i).ids[local.front()];
      double bd = space.distance(center, best);
      for (auto q : local) {
        const double d = space.distance(center, s.piece(i).ids[q]);
        if (d < bd) {
          bd = d;
          best = s.piece(i).ids[q];
        }
      }
      e.witnesses.push_back(best);
    }
    return e;
  }
}

bool validate_expansion(const Space& space, const PiecewiseSet& s, PointId center, int k, double c,
                        const Expansion& e) {
  if (e.i_bar < 1 || e.i_bar > static_cast<int>(s.N()) + 1) return false;
  if (e.witnesses.size() != e.index_set.size()) return false;
  const double rk = dyadic(k);
  const double big = (c + e.i_bar) * rk;
  for (std::size_t t = 0; t < e.index_set.size(); ++t) {
    const auto i = e.index_set[t];
    if (i >= s.N() || !s.piece_index(i).local_of(e.witnesses[t])) return false;
    for (auto y : ball_members(space, Ball::at(e.witnesses[t], rk)))
      if (!within(space.distance(center, y), big)) return false;
  }
  for (std::size_t j = 0; j < s.N(); ++j)
    if (std::find(e.index_set.begin(), e.index_set.end(), j) == e.index_set.end() &&
        s.piece_index(j).any_within(Ball::at(center, big)))
      return false;
  return true;
}

}  // namespace mmtrace
