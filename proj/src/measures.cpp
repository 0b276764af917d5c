#include "mmtrace/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmtrace/kernels.hpp"

namespace mmtrace {

namespace {

void check_k_max(const Space& space, int k_max) {
  require(k_max >= 0, ErrorKind::InvalidParameter, "k_max must be >= 0");
  require(k_max <= space.max_scale(), ErrorKind::ResolutionError, "2^{-k_max} falls below the scale floor");
}

void fill_density(MeasureSequence& seq) {
  seq.density_per_k.clear();
  const auto& m0 = seq.weights_per_k.front();
  for (const auto& mk : seq.weights_per_k) {
    std::vector<double> w(mk.size());
    for (std::size_t u = 0; u < mk.size(); ++u) w[u] = m0[u] > 0.0 ? mk[u] / m0[u] : 0.0;
    seq.density_per_k.push_back(std::move(w));
  }
}

// Dyadic radii 2^{-j}, j = 0, 1, ..., down to 2 * scale_floor.
std::vector<int> radius_exponents(const Space& space) {
  std::vector<int> js;
  const double stop = 2.0 * space.scale_floor() * (1.0 - kBallSlack);
  for (int j = 0; dyadic(j) >= stop; ++j) js.push_back(j);
  return js;
}

}  // namespace

MeasureSequence build_measure_sequence(const PiecewiseSet& s, double theta, int k_max, std::optional<double> p) {
  require(theta >= s.theta_S(), ErrorKind::ParameterError, "theta must be >= theta_N");
  if (p) require(theta < *p, ErrorKind::ParameterError, "theta must be below p");
  check_k_max(s.space(), k_max);
  MeasureSequence seq;
  seq.k_max = k_max;
  seq.theta = theta;
  // Own a copy so the sequence outlives the piecewise set.
  seq.support = std::make_shared<const PointIndex>(s.space(), s.union_ids());
  const std::size_t n = s.union_ids().size();
  for (int k = 0; k <= k_max; ++k) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < s.N(); ++i) {
      const double f = std::exp2(k * (theta - s.piece(i).theta));
      const auto& map = s.piece_to_union(i);
      for (std::size_t a = 0; a < map.size(); ++a) w[map[a]] += f * s.piece(i).weights[a];
    }
    seq.weights_per_k.push_back(std::move(w));
  }
  fill_density(seq);
  return seq;
}

MeasureSequence measure_sequence_from_weights(const PiecewiseSet& s, double theta,
                                              std::vector<std::vector<double>> weights_per_k) {
  require(!weights_per_k.empty(), ErrorKind::InvalidParameter, "no weight vectors");
  check_k_max(s.space(), static_cast<int>(weights_per_k.size()) - 1);
  for (const auto& w : weights_per_k)
    require(w.size() == s.union_ids().size(), ErrorKind::InvalidParameter, "weights must cover S");
  MeasureSequence seq;
  seq.k_max = static_cast<int>(weights_per_k.size()) - 1;
  seq.theta = theta;
  seq.support = std::make_shared<const PointIndex>(s.space(), s.union_ids());
  seq.weights_per_k = std::move(weights_per_k);
  fill_density(seq);
  return seq;
}

std::vector<TestSet> default_test_sets(const PiecewiseSet& s) {
  std::vector<TestSet> out;
  for (std::size_t i = 0; i < s.N(); ++i) out.push_back({s.piece(i).name.empty() ? "piece" + std::to_string(i + 1) : s.piece(i).name, s.piece(i).ids});
  for (std::size_t i = 0; i < s.N(); ++i)
    for (std::size_t j = i + 1; j < s.N(); ++j) {
      TestSet t{"intersection" + std::to_string(i + 1) + std::to_string(j + 1), {}};
      std::set_intersection(s.piece(i).ids.begin(), s.piece(i).ids.end(), s.piece(j).ids.begin(),
                            s.piece(j).ids.end(), std::back_inserter(t.ids));
      if (!t.ids.empty()) out.push_back(std::move(t));
    }
  if (s.space().has_coords()) {
    for (std::size_t i = 0; i < s.N(); ++i) {
      std::vector<double> x1;
      for (auto id : s.piece(i).ids) x1.push_back(s.space().coords(id)[0]);
      std::vector<double> sorted = x1;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
      const double med = sorted[sorted.size() / 2];
      TestSet t{"halfspace" + std::to_string(i + 1), {}};
      for (std::size_t a = 0; a < x1.size(); ++a)
        if (x1[a] <= med) t.ids.push_back(s.piece(i).ids[a]);
      if (!t.ids.empty() && t.ids.size() < s.piece(i).ids.size()) out.push_back(std::move(t));
    }
  }
  return out;
}

RegularityCertificate verify_regular_sequence(const MeasureSequence& seq, std::span<const double> c_grid,
                                              std::span<const TestSet> test_sets) {
  const Space& space = seq.space();
  const PointIndex& sup = *seq.support;
  const auto& ids = seq.ids();
  const int K = seq.k_max;
  const auto js = radius_exponents(space);
  require(!js.empty(), ErrorKind::ResolutionError, "no dyadic radius above 2 * scale_floor");
  RegularityCertificate cert;

  cert.m1 = true;
  for (const auto& w : seq.weights_per_k)
    for (double v : w) cert.m1 = cert.m1 && v > 0.0 && std::isfinite(v);

  // Distance to S for every space point; M2 centers are the points whose ball meets S.
  std::vector<double> dist_s(space.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(space.size()); ++c)
    dist_s[static_cast<std::size_t>(c)] = sup.nearest_distance(Ball::at(static_cast<PointId>(c), 0.0));

  // M2: r = 2^{-j} <= eps^k, i.e. k <= j.
  double c1 = 0.0;
  for (int j : js) {
    const double r = dyadic(j);
    const int kmax_here = std::min(j, K);
    const double rt = std::pow(r, seq.theta);
    std::vector<double> best(space.size(), 0.0);
#pragma omp parallel
    {
      std::vector<std::uint32_t> local;
#pragma omp for schedule(dynamic, 64)
      for (std::int64_t c = 0; c < static_cast<std::int64_t>(space.size()); ++c) {
        const auto x = static_cast<PointId>(c);
        if (!within(dist_s[x], r)) continue;
        const Ball b = Ball::at(x, r);
        sup.query(b, local);
        const double mu = space.fast_mu(b);
        double m = 0.0;
        for (int k = 0; k <= kmax_here; ++k) {
          double s = 0.0;
          for (auto l : local) s += seq.weights_per_k[static_cast<std::size_t>(k)][l];
          m = std::max(m, s);
        }
        best[x] = m * rt / mu;
      }
    }
    for (double v : best) c1 = std::max(c1, v);
  }
  cert.C1 = c1;
  cert.m2 = std::isfinite(c1) && c1 > 0.0;

  // M3: x in S, r = 2^{-j} >= eps^k, i.e. k >= j.
  double c2 = std::numeric_limits<double>::infinity();
  bool any_m3 = false;
  for (int j : js) {
    if (j > K) continue;
    any_m3 = true;
    const double r = dyadic(j);
    const double rt = std::pow(r, seq.theta);
    std::vector<double> worst(ids.size());
#pragma omp parallel
    {
      std::vector<std::uint32_t> local;
#pragma omp for schedule(dynamic, 64)
      for (std::int64_t a = 0; a < static_cast<std::int64_t>(ids.size()); ++a) {
        const Ball b = Ball::at(ids[static_cast<std::size_t>(a)], r);
        sup.query(b, local);
        const double mu = space.fast_mu(b);
        double m = std::numeric_limits<double>::infinity();
        for (int k = j; k <= K; ++k) {
          double s = 0.0;
          for (auto l : local) s += seq.weights_per_k[static_cast<std::size_t>(k)][l];
          m = std::min(m, s);
        }
        worst[static_cast<std::size_t>(a)] = m * rt / mu;
      }
    }
    for (double v : worst) c2 = std::min(c2, v);
  }
  require(any_m3, ErrorKind::ResolutionError, "k_max too small for any M3 scale");
  cert.C2 = c2;
  cert.m3 = std::isfinite(c2) && c2 > 0.0;

  // M4: eps^{theta j} / C3 <= w_k / w_{k+j} <= C3.
  double c3 = 1.0;
  for (int k = 0; k <= K; ++k)
    for (int j = 1; k + j <= K; ++j) {
      const double lo = std::pow(seq.epsilon, seq.theta * j);
      const auto& a = seq.density_per_k[static_cast<std::size_t>(k)];
      const auto& b = seq.density_per_k[static_cast<std::size_t>(k + j)];
      for (std::size_t u = 0; u < a.size(); ++u) {
        const double rho = a[u] / b[u];
        if (!(rho > 0.0) || !std::isfinite(rho)) {
          c3 = std::numeric_limits<double>::infinity();
          continue;
        }
        c3 = std::max({c3, rho, lo / rho});
      }
    }
  if (c3 <= 1.0 + 1e-12) c3 = 1.0;
  cert.C3 = c3;
  cert.m4 = std::isfinite(c3);

  // M5 at the finest available scale.
  const double rK = dyadic(K);
  const auto& wK = seq.weights_per_k[static_cast<std::size_t>(K)];
  cert.m5 = true;
  for (const auto& t : test_sets) {
    std::vector<char> in(ids.size(), 0);
    std::vector<PointId> members;
    for (auto id : t.ids) {
      const auto l = sup.local_of(id);
      require(l.has_value(), ErrorKind::InvalidParameter, "test set '" + t.name + "' leaves S");
      in[*l] = 1;
      members.push_back(id);
    }
    require(!members.empty(), ErrorKind::EmptySet, "empty test set '" + t.name + "'");
    std::vector<double> ratio(members.size());
#pragma omp parallel
    {
      std::vector<std::uint32_t> local;
#pragma omp for schedule(dynamic, 64)
      for (std::int64_t a = 0; a < static_cast<std::int64_t>(members.size()); ++a) {
        sup.query(Ball::at(members[static_cast<std::size_t>(a)], rK), local);
        double all = 0.0, part = 0.0;
        for (auto l : local) {
          all += wK[l];
          if (in[l]) part += wK[l];
        }
        ratio[static_cast<std::size_t>(a)] = part / all;
      }
    }
    const double mn = *std::min_element(ratio.begin(), ratio.end());
    cert.m5_names.push_back(t.name);
    cert.m5_ratios.push_back(mn);
    cert.m5 = cert.m5 && mn > 0.01;
  }

  for (double c : c_grid) {
    require(c >= 1.0, ErrorKind::InvalidParameter, "doubling factor c must be >= 1");
    double worst = 0.0;
    for (int k = 0; k <= K; ++k) {
      const auto& w = seq.weights_per_k[static_cast<std::size_t>(k)];
      const auto small = kernels::ball_mass(sup, w, ids, dyadic(k));
      const auto big = kernels::ball_mass(sup, w, ids, c * dyadic(k));
      for (std::size_t a = 0; a < ids.size(); ++a) worst = std::max(worst, big[a] / small[a]);
    }
    cert.c_grid.push_back(c);
    cert.doubling_at_scale.push_back(worst);
  }
  return cert;
}

ComparisonReport measure_comparison_check(const MeasureSequence& seq, const PiecewiseSet& s, double c) {
  require(c >= 1.0, ErrorKind::InvalidParameter, "c must be >= 1");
  const Space& space = seq.space();
  const PointIndex& sup = *seq.support;
  ComparisonReport rep;
  rep.c = c;
  rep.min_lower_ratio = std::numeric_limits<double>::infinity();
  std::vector<PointId> all(space.size());
  for (PointId i = 0; i < all.size(); ++i) all[i] = i;

  for (int k = 0; k <= seq.k_max; ++k) {
    const double rk = dyadic(k);
    const auto& mk = seq.weights_per_k[static_cast<std::size_t>(k)];
    const auto xnet = separated_net(space, all, k, true);
    const PointIndex xnet_idx(space, xnet.points);
    double upper_k = 0.0;
    std::size_t pairs_k = 0;
    for (std::size_t i = 0; i < s.N(); ++i) {
      const auto& piece = s.piece(i);
      const PointIndex& pidx = s.piece_index(i);
      const double f = std::exp2(k * (seq.theta - piece.theta));
      const auto snet = separated_net(space, piece.ids, k, true);
      std::vector<double> lo(snet.points.size(), std::numeric_limits<double>::infinity());
      std::vector<double> hi(snet.points.size(), 0.0);
      std::vector<std::size_t> cnt(snet.points.size(), 0);
#pragma omp parallel
      {
        std::vector<std::uint32_t> local, bars;
#pragma omp for schedule(dynamic, 8)
        for (std::int64_t a = 0; a < static_cast<std::int64_t>(snet.points.size()); ++a) {
          const PointId x = snet.points[static_cast<std::size_t>(a)];
          pidx.query(Ball::at(x, rk), local);
          double hx = 0.0;
          for (auto l : local) hx += piece.weights[l];
          std::vector<PointId> cands{x};
          xnet_idx.query(Ball::at(x, (c - 1.0) * rk), bars);
          for (auto l : bars) cands.push_back(xnet_idx.members()[l]);
          for (PointId xb : cands) {
            const Ball cb = Ball::at(xb, c * rk);
            pidx.query(cb, local);
            double hc = 0.0;
            for (auto l : local) hc += piece.weights[l];
            sup.query(cb, local);
            double m = 0.0;
            for (auto l : local) m += mk[l];
            lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)], m / (f * hc));
            hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)], m / (f * hx));
            ++cnt[static_cast<std::size_t>(a)];
          }
        }
      }
      for (std::size_t a = 0; a < lo.size(); ++a) {
        rep.min_lower_ratio = std::min(rep.min_lower_ratio, lo[a]);
        upper_k = std::max(upper_k, hi[a]);
        pairs_k += cnt[a];
      }
    }
    if (pairs_k == 0) {
      rep.skipped_scales.push_back(k);
      continue;
    }
    rep.scales.push_back(k);
    rep.max_upper_per_k.push_back(upper_k);
    rep.max_upper_ratio = std::max(rep.max_upper_ratio, upper_k);
    rep.pairs += pairs_k;
  }
  return rep;
}

double lp_tail_check(const MeasureSequence& seq, std::span<const double> f, double p, int L) {
  require(p >= 1.0, ErrorKind::ParameterError, "p must be >= 1");
  require(L >= 0 && L <= seq.k_max, ErrorKind::InvalidParameter, "L must lie in [0, k_max]");
  require(f.size() == seq.ids().size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
  double norm = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u) norm += std::pow(std::abs(f[u]), p) * seq.weights_per_k[0][u];
  if (norm == 0.0) return 0.0;
  double lhs = 0.0;
  for (int k = 0; k <= L; ++k) {
    const auto& w = seq.weights_per_k[static_cast<std::size_t>(k)];
    const auto st = kernels::ball_stats(*seq.support, f, w, seq.ids(), dyadic(k));
    for (std::size_t u = 0; u < st.size(); ++u) lhs += std::pow(st[u].best_dev, p) * w[u];
  }
  return lhs / norm;
}

nlohmann::json to_json(const RegularityCertificate& c) {
  nlohmann::json m5 = nlohmann::json::object();
  for (std::size_t i = 0; i < c.m5_names.size(); ++i) m5[c.m5_names[i]] = c.m5_ratios[i];
  return {{"M1", {{"ok", c.m1}}},
          {"M2", {{"ok", c.m2}, {"C1", c.C1}}},
          {"M3", {{"ok", c.m3}, {"C2", c.C2}}},
          {"M4", {{"ok", c.m4}, {"C3", c.C3}}},
          {"M5", {{"ok", c.m5}, {"ratios", m5}}},
          {"doubling", {{"c", c.c_grid}, {"value", c.doubling_at_scale}}}};
}

nlohmann::json to_json(const ComparisonReport& c) {
  return {{"c", c.c},
          {"min_lower_ratio", c.min_lower_ratio},
          {"max_upper_ratio", c.max_upper_ratio},
          {"scales", c.scales},
          {"max_upper_per_k", c.max_upper_per_k},
          {"skipped_scales", c.skipped_scales},
          {"pairs", c.pairs}};
}

}  // namespace mmtrace
