#include "mmtrace/content.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace mmtrace {

std::string to_string(CoverMethod m) {
  switch (m) {
    case CoverMethod::greedy: return "greedy";
    case CoverMethod::exact: return "exact";
    case CoverMethod::both: return "both";
  }
  return "unknown";
}

namespace {

struct Candidate {
  PointId center;
  double radius;
  double cost;
  std::vector<std::uint32_t> covers;  // local indices into the target
};

std::vector<double> candidate_radii(const Space& space, double delta) {
  const double floor = space.scale_floor();
  const double diam = space.diameter();
  int k = k_of_r(std::max(diam, floor));
  // Largest admissible radius first: 2^{-k} >= diameter, then shrink.
  std::vector<double> radii;
  for (;; ++k) {
    const double r = dyadic(k);
    if (r < floor) break;
    if (r < delta) radii.push_back(r);
  }
  std::reverse(radii.begin(), radii.end());
  return radii;
}

std::vector<Candidate> build_candidates(const Space& space, const std::vector<PointId>& target, double theta,
                                        double delta) {
  const PointIndex idx(space, target);
  const auto radii = candidate_radii(space, delta);
  std::vector<Candidate> out;
  out.reserve(target.size() * radii.size());
  for (PointId x : target) {
    for (double r : radii) {
      Candidate c{x, r, mu_ball(space, Ball::at(x, r)) / std::pow(r, theta), {}};
      idx.query(Ball::at(x, r), c.covers);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<std::size_t> greedy_cover(const std::vector<Candidate>& cands, std::size_t n) {
  std::vector<char> covered(n, 0);
  std::size_t remaining = n;
  using Entry = std::pair<double, std::size_t>;  // ratio, candidate
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands[i].covers.empty()) heap.emplace(cands[i].cost / double(cands[i].covers.size()), i);
  }
  std::vector<std::size_t> chosen;
  while (remaining > 0 && !heap.empty()) {
    auto [ratio, i] = heap.top();
    heap.pop();
    std::size_t fresh = 0;
    for (auto e : cands[i].covers) fresh += covered[e] ? 0 : 1;
    if (fresh == 0) continue;
    const double now = cands[i].cost / double(fresh);
    if (now > ratio && !heap.empty() && now > heap.top().first) {
      heap.emplace(now, i);
      continue;
    }
    chosen.push_back(i);
    for (auto e : cands[i].covers) {
      if (!covered[e]) {
        covered[e] = 1;
        --remaining;
      }
    }
  }
  require(remaining == 0, ErrorKind::ResolutionError, "candidate balls do not cover the target");
  return chosen;
}

class ExactSolver {
 public:
  ExactSolver(const std::vector<Candidate>& cands, std::size_t n) : cands_(cands), count_(n, 0), by_elem_(n) {
    for (std::size_t i = 0; i < cands.size(); ++i)
      for (auto e : cands[i].covers) by_elem_[e].push_back(i);
    for (auto& list : by_elem_)
      std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        return cands_[a].cost < cands_[b].cost || (cands_[a].cost == cands_[b].cost && a < b);
      });
  }

  std::vector<std::size_t> solve(double upper_bound, std::vector<std::size_t> incumbent) {
    best_ = upper_bound;
    best_set_ = std::move(incumbent);
    recurse(0, 0.0);
    return best_set_;
  }

 private:
  void recurse(std::size_t from, double cost) {
    if (cost >= best_) return;
    std::size_t e = from;
    while (e < count_.size() && count_[e] > 0) ++e;
    if (e == count_.size()) {
      best_ = cost;
      best_set_ = current_;
      return;
    }
    for (std::size_t c : by_elem_[e]) {
      if (cost + cands_[c].cost >= best_) break;
      current_.push_back(c);
      for (auto x : cands_[c].covers) ++count_[x];
      recurse(e + 1, cost + cands_[c].cost);
      for (auto x : cands_[c].covers) --count_[x];
      current_.pop_back();
    }
  }

  const std::vector<Candidate>& cands_;
  std::vector<int> count_;
  std::vector<std::vector<std::size_t>> by_elem_;
  std::vector<std::size_t> current_, best_set_;
  double best_ = 0.0;
};

double sum_cost(const std::vector<Candidate>& cands, const std::vector<std::size_t>& set) {
  double v = 0.0;
  for (auto i : set) v += cands[i].cost;
  return v;
}

CoverSolution make_solution(const std::vector<Candidate>& cands, std::vector<std::size_t> set, CoverMethod m) {
  std::sort(set.begin(), set.end());
  CoverSolution sol;
  sol.method_used = m;
  sol.candidates = cands.size();
  for (auto i : set) sol.balls.push_back(Ball::at(cands[i].center, cands[i].radius));
  sol.value = sum_cost(cands, set);
  return sol;
}

std::vector<PointId> normalized_target(const Space& space, std::span<const PointId> target) {
  std::vector<PointId> t(target.begin(), target.end());
  for (auto id : t) space.check_id(id);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

CoverSolution hausdorff_content(const Space& space, const ContentQuery& query) {
  require(query.theta >= 0.0 && std::isfinite(query.theta), ErrorKind::InvalidParameter, "theta must be >= 0");
  const auto target = normalized_target(space, query.target);
  if (target.empty()) {
    CoverSolution s;
    s.method_used = query.method;
    if (query.method != CoverMethod::greedy) s.optimality_gap = 0.0;
    return s;
  }
  require(query.delta > space.scale_floor(), ErrorKind::ResolutionError, "delta must exceed scale_floor");
  const auto cands = build_candidates(space, target, query.theta, query.delta);
  require(!cands.empty(), ErrorKind::ResolutionError, "no dyadic radius in [scale_floor, delta)");

  if (query.method == CoverMethod::greedy) return make_solution(cands, greedy_cover(cands, target.size()), CoverMethod::greedy);

  require(cands.size() <= kExactCandidateLimit, ErrorKind::InvalidParameter,
          "exact cover limited to " + std::to_string(kExactCandidateLimit) + " candidates, have " +
              std::to_string(cands.size()));
  auto greedy = greedy_cover(cands, target.size());
  const double gv = sum_cost(cands, greedy);
  // Seed the bound slightly above the greedy value so ties still produce a set.
  ExactSolver solver(cands, target.size());
  auto exact = solver.solve(std::nextafter(gv, std::numeric_limits<double>::infinity()), greedy);
  const double ev = sum_cost(cands, exact);
  const double gap = ev > 0.0 ? gv / ev - 1.0 : 0.0;

  auto sol = query.method == CoverMethod::exact ? make_solution(cands, exact, CoverMethod::exact)
                                                : make_solution(cands, greedy, CoverMethod::both);
  sol.optimality_gap = gap;
  return sol;
}

MeasureTrace hausdorff_measure(const Space& space, std::span<const PointId> target, double theta) {
  MeasureTrace tr;
  const auto t = normalized_target(space, target);
  if (t.empty()) return tr;
  const double stop = 2.0 * space.scale_floor() * (1.0 - kBallSlack);
  require(1.0 >= stop, ErrorKind::ResolutionError, "scale_floor too large for any delta <= 1");
  for (int k = 0; dyadic(k) >= stop; ++k) {
    ContentQuery q{t, theta, dyadic(k), CoverMethod::greedy};
    const double v = hausdorff_content(space, q).value;
    if (!tr.values.empty() && v < tr.values.back()) tr.monotone = false;
    tr.deltas.push_back(dyadic(k));
    tr.values.push_back(v);
  }
  tr.value = tr.values.back();
  if (tr.values.size() >= 2) {
    const double a = tr.values[tr.values.size() - 2], b = tr.values.back();
    const double scale = std::max(std::abs(a), std::abs(b));
    tr.stabilized = scale == 0.0 || std::abs(a - b) <= 0.05 * scale;
  }
  return tr;
}

std::vector<double> piece_measure_weights(const Space& space, std::span<const PointId> target, double theta,
                                          WeightMode mode, const std::optional<std::vector<double>>& elements) {
  require(!target.empty(), ErrorKind::EmptySet, "empty piece");
  for (auto id : target) space.check_id(id);
  if (mode == WeightMode::analytic) {
    require(elements.has_value(), ErrorKind::MissingMetadata, "analytic weights need generator cell elements");
    require(elements->size() == target.size(), ErrorKind::MissingMetadata, "cell element count mismatch");
    for (double e : *elements) require(e > 0.0 && std::isfinite(e), ErrorKind::MissingMetadata, "nonpositive cell element");
    return *elements;
  }
  std::vector<double> h(target.size());
  const double delta = 2.0 * space.scale_floor();
  for (std::size_t i = 0; i < target.size(); ++i) {
    ContentQuery q{{target[i]}, theta, delta, CoverMethod::greedy};
    h[i] = hausdorff_content(space, q).value;
  }
  return h;
}

nlohmann::json to_json(const CoverSolution& sol) {
  nlohmann::json balls = nlohmann::json::array();
  for (const auto& b : sol.balls) balls.push_back({{"center", b.center_id()}, {"radius", b.radius}});
  nlohmann::json j{{"value", sol.value}, {"balls", balls}, {"method", to_string(sol.method_used)}};
  j["gap"] = sol.optimality_gap ? nlohmann::json(*sol.optimality_gap) : nlohmann::json(nullptr);
  return j;
}

}  // namespace mmtrace
