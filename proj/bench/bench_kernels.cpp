// OpenMP kernels against the serial reference scans.
//
//   build/bench/mmtrace_bench --benchmark_filter=ball_stats

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "mmtrace/kernels.hpp"

using namespace mmtrace;

namespace {

struct Fixture {
  Space space;
  std::vector<PointId> subset, centers;
  std::vector<double> f, w, cv;

  Fixture(std::size_t m, std::uint64_t seed) : space(make_grid(m)) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (PointId a = 0; a < space.size(); ++a) {
      if (U(rng) < 0.5) subset.push_back(a);
      if (U(rng) < 0.1) centers.push_back(a);
    }
    for (std::size_t a = 0; a < subset.size(); ++a) {
      f.push_back(U(rng));
      w.push_back(0.5 + U(rng));
    }
    for (std::size_t c = 0; c < centers.size(); ++c) cv.push_back(U(rng));
  }

  static Space make_grid(std::size_t m) {
    const double h = 1.0 / static_cast<double>(m - 1);
    std::vector<double> c;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) {
          c.push_back(static_cast<double>(i) * h);
          c.push_back(static_cast<double>(j) * h);
          c.push_back(static_cast<double>(k) * h);
        }
    return Space::from_coords(3, std::move(c), std::vector<double>(m * m * m, h * h * h), h);
  }
};

const Fixture& fixture() {
  static const Fixture fx(33, 5);
  return fx;
}

double radius(const benchmark::State& st) { return static_cast<double>(st.range(0)) / 32.0; }

template <bool Ref>
void ball_mass(benchmark::State& st) {
  const auto& fx = fixture();
  const PointIndex idx(fx.space, fx.subset);
  for (auto _ : st) {
    auto out = Ref ? kernels::reference::ball_mass(idx, fx.w, fx.centers, radius(st))
                   : kernels::ball_mass(idx, fx.w, fx.centers, radius(st));
    benchmark::DoNotOptimize(out);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(fx.centers.size()));
}

template <bool Ref>
void ball_stats(benchmark::State& st) {
  const auto& fx = fixture();
  const PointIndex idx(fx.space, fx.subset);
  for (auto _ : st) {
    auto out = Ref ? kernels::reference::ball_stats(idx, fx.f, fx.w, fx.centers, radius(st))
                   : kernels::ball_stats(idx, fx.f, fx.w, fx.centers, radius(st));
    benchmark::DoNotOptimize(out);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(fx.centers.size()));
}

template <bool Ref>
void ball_center_power(benchmark::State& st) {
  const auto& fx = fixture();
  const PointIndex idx(fx.space, fx.subset);
  for (auto _ : st) {
    auto out = Ref ? kernels::reference::ball_center_power(idx, fx.f, fx.w, fx.centers, fx.cv, radius(st), 2.5)
                   : kernels::ball_center_power(idx, fx.f, fx.w, fx.centers, fx.cv, radius(st), 2.5);
    benchmark::DoNotOptimize(out);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(fx.centers.size()));
}

template <bool Ref>
void pair_cross(benchmark::State& st) {
  const auto& fx = fixture();
  const PointIndex idx(fx.space, fx.subset);
  const double r = radius(st);
  std::vector<std::pair<PointId, PointId>> pairs;
  for (std::size_t a = 0; a < fx.centers.size() && pairs.size() < 2000; a += 2)
    for (std::size_t b = 1; b < fx.centers.size() && pairs.size() < 2000; b += 17)
      if (fx.space.distance(fx.centers[a], fx.centers[b]) <= r) pairs.emplace_back(fx.centers[a], fx.centers[b]);
  for (auto _ : st) {
    auto out = Ref ? kernels::reference::pair_cross(idx, fx.f, fx.w, idx, fx.f, fx.w, pairs, r)
                   : kernels::pair_cross(idx, fx.f, fx.w, idx, fx.f, fx.w, pairs, r);
    benchmark::DoNotOptimize(out);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(pairs.size()));
}

}  // namespace

// Radii 2/32 and 6/32 on a 33^3 grid.
BENCHMARK(ball_mass<false>)->Name("ball_mass/omp")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(ball_mass<true>)->Name("ball_mass/serial")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(ball_stats<false>)->Name("ball_stats/omp")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(ball_stats<true>)->Name("ball_stats/serial")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(ball_center_power<false>)->Name("ball_center_power/omp")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(ball_center_power<true>)->Name("ball_center_power/serial")->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(pair_cross<false>)->Name("pair_cross/omp")->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(pair_cross<true>)->Name("pair_cross/serial")->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
