#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmtrace/functionals.hpp"

namespace mmtrace {

namespace {

double lp_m0(const MeasureSequence& seq, std::span<const double> f, double p) {
  double s = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u) s += std::pow(std::abs(f[u]), p) * seq.weights_per_k[0][u];
  return std::pow(s, 1.0 / p);
}

void check_inputs(const MeasureSequence& seq, std::span<const double> f, double p, double c) {
  require(f.size() == seq.ids().size(), ErrorKind::InvalidParameter, "function must have one value per point of S");
  require(p > 1.0 && std::isfinite(p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  require(c >= 1.0 && std::isfinite(c), ErrorKind::InvalidParameter, "c must be >= 1");
}

Ball scaled(const Ball& b, double factor) {
  Ball out = b;
  out.radius = b.radius * factor;
  return out;
}

struct Candidate {
  Ball ball;
  double term = 0.0;
  std::vector<PointId> members;
  int k = 0;
  double mass = 0.0;
};

// Subsets of at most kExactFamilyLimit candidates, checked pairwise.
std::vector<std::size_t> exact_best(const std::vector<Candidate>& cand, std::size_t n_points, double& best) {
  const std::size_t n = cand.size();
  std::vector<std::vector<char>> clash(n, std::vector<char>(n, 0));
  std::vector<char> mark(n_points, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (auto x : cand[a].members) mark[x] = 1;
    for (std::size_t b = a + 1; b < n; ++b)
      for (auto x : cand[b].members)
        if (mark[x]) {
          clash[a][b] = clash[b][a] = 1;
          break;
        }
    for (auto x : cand[a].members) mark[x] = 0;
  }
  best = 0.0;
  std::size_t best_mask = 0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    bool ok = true;
    double v = 0.0;
    for (std::size_t a = 0; a < n && ok; ++a) {
      if (!(mask >> a & 1)) continue;
      v += cand[a].term;
      for (std::size_t b = a + 1; b < n && ok; ++b)
        if ((mask >> b & 1) && clash[a][b]) ok = false;
    }
    if (ok && v > best) {
      best = v;
      best_mask = mask;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < n; ++a)
    if (best_mask >> a & 1) out.push_back(a);
  return out;
}

}  // namespace

FamilyCheck validate_family(const Space& space, std::span<const PointId> s_ids, const NiceFamily& family) {
  require(family.c >= 1.0, ErrorKind::InvalidParameter, "c must be >= 1");
  FamilyCheck chk;
  const PointIndex s_idx(space, std::vector<PointId>(s_ids.begin(), s_ids.end()));
  std::vector<char> used(space.size(), 0);
  for (const auto& b : family.balls) {
    if (b.centered_on_point()) space.check_id(b.center_id());
    if (!(b.radius > 0.0) || b.radius > 1.0 * (1.0 + kBallSlack)) chk.f2 = false;
    if (!s_idx.any_within(scaled(b, family.c))) chk.f3 = false;
    if (family.kind == FamilyKind::whitney && s_idx.any_within(b)) chk.f4 = false;
    for (auto x : ball_members(space, b)) {
      if (used[x]) chk.f1 = false;
      used[x] = 1;
    }
  }
  return chk;
}

double bsn_term(const MeasureSequence& seq, std::span<const double> f, double p, double c, const Ball& ball) {
  check_inputs(seq, f, p, c);
  require(ball.radius > 0.0, ErrorKind::InvalidParameter, "ball radius must be positive");
  const int k = std::max(k_of_r(ball.radius), 0);
  require(k <= seq.k_max, ErrorKind::ResolutionError, "ball radius below the finest scale of the sequence");
  if (!seq.support->any_within(scaled(ball, c))) return 0.0;
  const double e = local_stats(f, seq.support->query(scaled(ball, 2.0 * c)), seq.weights(k)).best_dev;
  return seq.space().fast_mu(ball) / std::pow(ball.radius, p) * std::pow(e, p);
}

FamilySearchResult enumerate_or_search_nice_family(const MeasureSequence& seq, std::span<const double> f, double p,
                                                   double c, SearchOptions opt) {
  check_inputs(seq, f, p, c);
  const Space& space = seq.space();
  FamilySearchResult res;
  res.family.c = c;
  res.family.kind = opt.kind;
  if (opt.budget == 0) return res;

  std::vector<PointId> all(space.size());
  std::iota(all.begin(), all.end(), PointId{0});
  std::vector<Candidate> cand;
  for (int k = 0; k <= seq.k_max; ++k) {
    const double r = dyadic(k);
    for (auto z : separated_net(space, all, k, true).points) {
      const Ball b = Ball::at(z, r);
      if (!seq.support->any_within(scaled(b, c))) continue;
      if (opt.kind == FamilyKind::whitney && seq.support->any_within(b)) continue;
      const double t = bsn_term(seq, f, p, c, b);
      if (t > 0.0) cand.push_back({b, t, ball_members(space, b), k, space.fast_mu(b)});
    }
  }
  res.candidates = cand.size();

  if (opt.allow_exact && cand.size() <= kExactFamilyLimit) {
    double best = 0.0;
    for (auto a : exact_best(cand, space.size(), best)) res.family.balls.push_back(cand[a].ball);
    res.objective = best;
    res.exact = true;
    res.trace.push_back(best);
    return res;
  }

  auto sorted_by = [&](auto key, int only_k) {
    std::vector<std::size_t> o;
    for (std::size_t a = 0; a < cand.size(); ++a)
      if (only_k < 0 || cand[a].k == only_k) o.push_back(a);
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    return o;
  };
  auto by_term = [&](std::size_t a) { return cand[a].term; };
  auto by_density = [&](std::size_t a) { return cand[a].term / cand[a].mass; };
  const auto order = sorted_by(by_term, -1);
  const auto dense = sorted_by(by_density, -1);

  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(space.size(), kFree);
  std::vector<char> chosen(cand.size(), 0);
  double objective = 0.0;

  auto fits = [&](std::size_t a) {
    for (auto x : cand[a].members)
      if (owner[x] != kFree) return false;
    return true;
  };
  auto take = [&](std::size_t a) {
    for (auto x : cand[a].members) owner[x] = a;
    chosen[a] = 1;
    objective += cand[a].term;
  };
  auto drop = [&](std::size_t a) {
    for (auto x : cand[a].members) owner[x] = kFree;
    chosen[a] = 0;
    objective -= cand[a].term;
  };
  auto fill = [&](const std::vector<std::size_t>& o, std::vector<std::size_t>* added) {
    for (auto a : o)
      if (!chosen[a] && fits(a)) {
        take(a);
        if (added) added->push_back(a);
      }
  };

  // Candidates containing each point, and ranks in both orders, for local refills.
  std::vector<std::vector<std::uint32_t>> touching(space.size());
  for (std::size_t a = 0; a < cand.size(); ++a)
    for (auto x : cand[a].members) touching[x].push_back(static_cast<std::uint32_t>(a));
  std::vector<std::size_t> rank_term(cand.size()), rank_dense(cand.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_term[order[r]] = r;
  for (std::size_t r = 0; r < dense.size(); ++r) rank_dense[dense[r]] = r;
  std::vector<char> mark(cand.size(), 0);
  auto near = [&](const std::vector<PointId>& pts, const std::vector<std::size_t>& rank) {
    std::vector<std::size_t> out;
    for (auto x : pts)
      for (auto b : touching[x])
        if (!mark[b]) {
          mark[b] = 1;
          out.push_back(b);
        }
    for (auto b : out) mark[b] = 0;
    std::sort(out.begin(), out.end(), [&](std::size_t u, std::size_t v) { return rank[u] < rank[v]; });
    return out;
  };
  auto clear = [&] {
    for (std::size_t a = 0; a < cand.size(); ++a)
      if (chosen[a]) drop(a);
    objective = 0.0;
  };

  // Starting packings: by term, by term per unit mass, and one per scale
  // (that scale first, the rest by term). The best one is kept.
  std::vector<std::vector<std::size_t>> starts;
  {
    std::vector<std::vector<std::size_t>> seeds{order, dense};
    for (int k = 0; k <= seq.k_max; ++k) seeds.push_back(sorted_by(by_term, k));
    double best = -1.0;
    for (const auto& sd : seeds) {
      clear();
      fill(sd, nullptr);
      fill(order, nullptr);
      if (objective > best * (1.0 + 1e-12)) {
        best = objective;
        starts.assign(1, {});
        for (std::size_t a = 0; a < cand.size(); ++a)
          if (chosen[a]) starts[0].push_back(a);
      }
    }
    clear();
    for (auto a : starts[0]) take(a);
  }
  res.trace.push_back(objective);

  std::size_t spent = 0;
  std::vector<std::size_t> added;
  for (bool improved = true; improved && spent < opt.budget;) {
    improved = false;
    // Insert one candidate, evicting its conflicts, then refill.
    for (auto a : order) {
      if (spent >= opt.budget) break;
      if (chosen[a]) continue;
      ++spent;
      std::vector<std::size_t> conflicts;
      for (auto x : cand[a].members)
        if (owner[x] != kFree) conflicts.push_back(owner[x]);
      std::sort(conflicts.begin(), conflicts.end());
      conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
      double lost = 0.0;
      for (auto b : conflicts) lost += cand[b].term;
      if (cand[a].term <= lost * (1.0 + 1e-12)) continue;
      const double before = objective;
      std::vector<PointId> freed;
      for (auto b : conflicts) {
        freed.insert(freed.end(), cand[b].members.begin(), cand[b].members.end());
        drop(b);
      }
      take(a);
      fill(near(freed, rank_term), nullptr);
      if (objective > before) {
        improved = true;
        res.trace.push_back(objective);
      }
    }
    // Remove one chosen ball and refill its room by density; undo unless better.
    for (std::size_t a = 0; a < cand.size(); ++a) {
      if (spent >= opt.budget) break;
      if (!chosen[a]) continue;
      ++spent;
      const double before = objective;
      drop(a);
      chosen[a] = 1;  // keep it out of the refill
      added.clear();
      fill(near(cand[a].members, rank_dense), &added);
      chosen[a] = 0;
      if (objective > before * (1.0 + 1e-12)) {
        improved = true;
        res.trace.push_back(objective);
      } else {
        for (auto b : added) drop(b);
        take(a);
      }
    }
  }

  // Recompute the sum in a fixed order to avoid drift from the add/remove updates.
  objective = 0.0;
  for (auto a : order)
    if (chosen[a]) {
      res.family.balls.push_back(cand[a].ball);
      objective += cand[a].term;
    }
  res.objective = objective;
  return res;
}

FunctionalReport bsn_functional(const MeasureSequence& seq, std::span<const double> f, double p, double c,
                                const NiceFamily& family) {
  check_inputs(seq, f, p, c);
  require(family.c == c, ErrorKind::InvalidParameter, "family constant differs from c");
  const auto chk = validate_family(seq.space(), seq.ids(), family);
  require(chk.f1, ErrorKind::InvalidFamily, "balls are not pairwise disjoint");
  require(chk.f2, ErrorKind::InvalidFamily, "ball radius outside (0, 1]");
  require(chk.f3, ErrorKind::InvalidFamily, "some dilated ball misses S");
  require(chk.f4, ErrorKind::InvalidFamily, "Whitney ball meets S");
  double sum = 0.0;
  for (const auto& b : family.balls) sum += bsn_term(seq, f, p, c, b);
  FunctionalReport r;
  r.name = "bsn";
  const double lp = lp_m0(seq, f, p);
  const double fam = std::pow(sum, 1.0 / p);
  r.parts = {{"lp", lp}, {"family_sum", fam}};
  r.value = lp + fam;
  r.params = {{"p", p}, {"c", c}, {"theta", seq.theta}, {"k_max", seq.k_max},
              {"balls", static_cast<double>(family.balls.size())}};
  if (c < 3.0 / seq.epsilon) r.notes.push_back("c below 3/eps");
  return r;
}

FunctionalReport bsn_functional(const MeasureSequence& seq, std::span<const double> f, double p, double c,
                                SearchOptions opt, FamilySearchResult* search_out) {
  auto found = enumerate_or_search_nice_family(seq, f, p, c, opt);
  auto r = bsn_functional(seq, f, p, c, found.family);
  r.params["candidates"] = static_cast<double>(found.candidates);
  r.params["exact"] = found.exact ? 1.0 : 0.0;
  r.notes.push_back(found.exact ? "exact maximum over the candidate pool" : "searched lower bound of the supremum");
  if (search_out) *search_out = std::move(found);
  return r;
}

}  // namespace mmtrace
