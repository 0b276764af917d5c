#include <random>

#include "helpers.hpp"
#include "mmtrace/kernels.hpp"

using namespace mmtrace;

namespace {

struct Setup {
  Space space;
  std::vector<PointId> subset, centers;
  std::vector<double> f, w;
};

Setup make(std::size_t dim, double h, std::uint64_t seed) {
  Setup s{testutil::grid(dim, h), {}, {}, {}, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (PointId a = 0; a < s.space.size(); ++a) {
    if (U(rng) < 0.4) s.subset.push_back(a);
    if (U(rng) < 0.3) s.centers.push_back(a);
  }
  for (std::size_t a = 0; a < s.subset.size(); ++a) {
    s.f.push_back(std::floor(8 * U(rng)) / 8);  // ties exercise the median logic
    s.w.push_back(0.1 + U(rng));
  }
  return s;
}

}  // namespace

TEST_CASE("indexed kernels agree with the serial reference") {
  for (auto [dim, h] : {std::pair<std::size_t, double>{1, 1.0 / 128}, {2, 1.0 / 24}, {3, 1.0 / 10}}) {
    const auto s = make(dim, h, 31 + dim);
    const PointIndex idx(s.space, s.subset);
    for (double r : {0.0, h, 2.5 * h, 0.2, 0.9}) {
      CAPTURE(dim);
      CAPTURE(r);
      const auto m = kernels::ball_mass(idx, s.w, s.centers, r);
      const auto mr = kernels::reference::ball_mass(idx, s.w, s.centers, r);
      const auto a = kernels::ball_mean(idx, s.f, s.w, s.centers, r);
      const auto ar = kernels::reference::ball_mean(idx, s.f, s.w, s.centers, r);
      const auto st = kernels::ball_stats(idx, s.f, s.w, s.centers, r);
      const auto sr = kernels::reference::ball_stats(idx, s.f, s.w, s.centers, r);
      std::vector<double> cv(s.centers.size());
      for (std::size_t c = 0; c < cv.size(); ++c) cv[c] = 0.3 * static_cast<double>(c % 5);
      const auto pw = kernels::ball_center_power(idx, s.f, s.w, s.centers, cv, r, 2.5);
      const auto pr = kernels::reference::ball_center_power(idx, s.f, s.w, s.centers, cv, r, 2.5);
      for (std::size_t c = 0; c < s.centers.size(); ++c) {
        CHECK(m[c] == doctest::Approx(mr[c]).epsilon(1e-13));
        CHECK(a[c] == doctest::Approx(ar[c]).epsilon(1e-13));
        CHECK(st[c].best_dev == doctest::Approx(sr[c].best_dev).epsilon(1e-12));
        CHECK(st[c].osc == doctest::Approx(sr[c].osc).epsilon(1e-12));
        CHECK(pw[c] == doctest::Approx(pr[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("pair kernels agree with the serial reference") {
  const auto s = make(2, 1.0 / 20, 8);
  const auto t = make(2, 1.0 / 20, 9);
  const PointIndex ia(s.space, s.subset), ib(t.space, t.subset);
  const double r = 0.12;
  std::vector<std::pair<PointId, PointId>> pairs;
  for (std::size_t a = 0; a < s.centers.size(); a += 3)
    for (std::size_t b = 0; b < t.centers.size(); b += 7)
      if (s.space.distance(s.centers[a], t.centers[b]) <= r) pairs.emplace_back(s.centers[a], t.centers[b]);
  REQUIRE(pairs.size() > 20);
  const auto x = kernels::pair_cross(ia, s.f, s.w, ib, t.f, t.w, pairs, r);
  const auto y = kernels::reference::pair_cross(ia, s.f, s.w, ib, t.f, t.w, pairs, r);
  for (std::size_t q = 0; q < pairs.size(); ++q) CHECK(x[q] == doctest::Approx(y[q]).epsilon(1e-12));

  // Sorted-list route of the gluing code gives the same numbers.
  std::vector<PointId> ys, zs;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> at;
  for (const auto& [p, q] : pairs) {
    at.emplace_back(static_cast<std::uint32_t>(ys.size()), static_cast<std::uint32_t>(zs.size()));
    ys.push_back(p);
    zs.push_back(q);
  }
  const auto la = kernels::sorted_ball_lists(ia, s.f, s.w, ys, r);
  const auto lb = kernels::sorted_ball_lists(ib, t.f, t.w, zs, r);
  const auto z = kernels::cross_from_lists(la, lb, at);
  for (std::size_t q = 0; q < pairs.size(); ++q) CHECK(z[q] == doctest::Approx(y[q]).epsilon(1e-12));
}

TEST_CASE("kernels on a matrix space") {
  std::vector<double> d;
  const std::size_t n = 30;
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) d.push_back(std::abs(std::sin(double(i)) - std::sin(double(j))) + 0.01);
  const auto sp = Space::from_matrix(n, d, std::vector<double>(n, 1.0), 0.01);
  const auto ids = testutil::all_ids(sp);
  const PointIndex idx(sp, ids);
  std::vector<double> f(n), w(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) f[a] = double(a % 4);
  const auto st = kernels::ball_stats(idx, f, w, ids, 0.5);
  const auto sr = kernels::reference::ball_stats(idx, f, w, ids, 0.5);
  for (std::size_t a = 0; a < n; ++a) CHECK(st[a].best_dev == doctest::Approx(sr[a].best_dev).epsilon(1e-12));
}
