#include <algorithm>
#include <cmath>
#include <limits>

#include "mmtrace/functionals.hpp"
#include "mmtrace/kernels.hpp"

namespace mmtrace {

GluingCache::GluingCache(const PiecewiseSet& s, int k_max) : k_max_(k_max) {
  require(k_max >= 1, ErrorKind::InvalidParameter, "k_max must be >= 1");
  for (std::size_t i = 0; i < s.N(); ++i)
    for (std::size_t j = i + 1; j < s.N(); ++j)
      for (int k = 1; k <= k_max; ++k) {
        Block b;
        b.i = i;
        b.j = j;
        b.k = k;
        const auto& yi = s.piece(i).ids;
        std::vector<char> seen_z(s.piece(j).ids.size(), 0);
        std::vector<std::uint32_t> local;
        for (std::uint32_t y = 0; y < yi.size(); ++y) {
          s.piece_index(j).query(Ball::at(yi[y], dyadic(k)), local);
          if (local.empty()) continue;
          b.s_ij.push_back(y);
          for (auto z : local) {
            b.pairs.emplace_back(y, z);
            seen_z[z] = 1;
          }
        }
        for (std::uint32_t z = 0; z < seen_z.size(); ++z)
          if (seen_z[z]) b.s_ji.push_back(z);
        blocks_.push_back(std::move(b));
      }
}

namespace {

std::vector<PointId> ids_of(const SubsetPiece& p, const std::vector<std::uint32_t>& locals) {
  std::vector<PointId> out(locals.size());
  for (std::size_t a = 0; a < locals.size(); ++a) out[a] = p.ids[locals[a]];
  return out;
}

std::vector<std::uint32_t> position_lookup(std::size_t n, const std::vector<std::uint32_t>& locals) {
  std::vector<std::uint32_t> pos(n, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t a = 0; a < locals.size(); ++a) pos[locals[a]] = static_cast<std::uint32_t>(a);
  return pos;
}

}  // namespace

FunctionalReport gluing(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p, int which,
                        ScaleOptions opt, WeightKind kind, const GluingCache* cache) {
  require(which >= 1 && which <= 3, ErrorKind::InvalidParameter, "gluing functional index must be 1, 2 or 3");
  require(p > 1.0 && std::isfinite(p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  require(f.size() == s.union_ids().size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
  const int K = resolve_k_max(space, opt);
  FunctionalReport r;
  r.name = "gl" + std::to_string(which);
  r.params = {{"p", p}, {"l", which}, {"k_max", K}};
  if (s.N() == 1) {
    r.parts = {{"sum", 0.0}};
    r.notes.push_back("single piece: no cross pairs");
    return r;
  }
  std::optional<GluingCache> own;
  if (!cache || cache->k_max() < K) {
    own.emplace(s, K);
    cache = &*own;
  }
  std::vector<std::vector<double>> fp(s.N());
  for (std::size_t i = 0; i < s.N(); ++i) fp[i] = s.restrict_to_piece(f, i);

  double total = 0.0, last = 0.0;
  for (const auto& b : cache->blocks()) {
    if (b.k > K || b.pairs.empty()) continue;
    const auto& Pi = s.piece(b.i);
    const auto& Pj = s.piece(b.j);
    const double r_k = dyadic(b.k);
    const double fac = std::exp2(b.k * (p - Pi.theta - Pj.theta));
    const auto cy = ids_of(Pi, b.s_ij);
    const auto cz = ids_of(Pj, b.s_ji);
    const auto pos_y = position_lookup(Pi.ids.size(), b.s_ij);
    const auto pos_z = position_lookup(Pj.ids.size(), b.s_ji);

    std::vector<double> mu_y(cy.size()), mu_z(cz.size());
    for (std::size_t a = 0; a < cy.size(); ++a) mu_y[a] = space.fast_mu(Ball::at(cy[a], r_k));
    for (std::size_t a = 0; a < cz.size(); ++a) mu_z[a] = space.fast_mu(Ball::at(cz[a], r_k));

    std::vector<double> ay, az, cross;
    if (which >= 2) {
      ay = kernels::ball_mean(s.piece_index(b.i), fp[b.i], Pi.weights, cy, r_k);
      az = kernels::ball_mean(s.piece_index(b.j), fp[b.j], Pj.weights, cz, r_k);
    }
    if (which == 3) {
      const auto ly = kernels::sorted_ball_lists(s.piece_index(b.i), fp[b.i], Pi.weights, cy, r_k);
      const auto lz = kernels::sorted_ball_lists(s.piece_index(b.j), fp[b.j], Pj.weights, cz, r_k);
      std::vector<std::pair<std::uint32_t, std::uint32_t>> idx(b.pairs.size());
      for (std::size_t q = 0; q < b.pairs.size(); ++q) idx[q] = {pos_y[b.pairs[q].first], pos_z[b.pairs[q].second]};
      cross = kernels::cross_from_lists(ly, lz, idx);
    }

    double block = 0.0;
    for (std::size_t q = 0; q < b.pairs.size(); ++q) {
      const auto [y, z] = b.pairs[q];
      const auto py = pos_y[y], pz = pos_z[z];
      const double w = kind == WeightKind::geometric ? 1.0 / (std::sqrt(mu_y[py]) * std::sqrt(mu_z[pz]))
                                                     : 0.5 * (1.0 / mu_y[py] + 1.0 / mu_z[pz]);
      double t = 0.0;
      if (which == 1)
        t = std::pow(std::abs(fp[b.i][y] - fp[b.j][z]), p);
      else if (which == 2)
        t = std::pow(std::abs(ay[py] - az[pz]), p);
      else  // A^{ij} >= |A^i - A^j| holds exactly; keep it so under rounding too
        t = std::pow(std::max(cross[q], std::abs(ay[py] - az[pz])), p);
      block += w * t * Pi.weights[y] * Pj.weights[z];
    }
    block *= 2.0 * fac;
    total += block;
    if (b.k == K) last += block;
  }
  r.parts = {{"sum", total}};
  r.value = std::pow(total, 1.0 / p);
  r.truncation_tail = last;
  return r;
}

}  // namespace mmtrace
