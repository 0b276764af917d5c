#include "mmtrace/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mmtrace::kernels {

namespace {

template <typename Fn>
void for_centers(std::size_t n, Fn&& fn) {
#pragma omp parallel
  {
    std::vector<std::uint32_t> local;
    StatsWorkspace ws;
#pragma omp for schedule(dynamic, 32)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) fn(static_cast<std::size_t>(i), local, ws);
  }
}

}  // namespace

std::vector<double> ball_mass(const PointIndex& idx, std::span<const double> weights,
                              std::span<const PointId> centers, double r) {
  std::vector<double> out(centers.size());
  for_centers(centers.size(), [&](std::size_t i, std::vector<std::uint32_t>& local, StatsWorkspace&) {
    idx.query(Ball::at(centers[i], r), local);
    double s = 0.0;
    for (auto l : local) s += weights[l];
    out[i] = s;
  });
  return out;
}

std::vector<double> ball_mean(const PointIndex& idx, std::span<const double> values, std::span<const double> weights,
                              std::span<const PointId> centers, double r) {
  std::vector<double> out(centers.size());
  for_centers(centers.size(), [&](std::size_t i, std::vector<std::uint32_t>& local, StatsWorkspace&) {
    idx.query(Ball::at(centers[i], r), local);
    out[i] = StatsWorkspace::mean(values, local, weights);
  });
  return out;
}

std::vector<LocalStats> ball_stats(const PointIndex& idx, std::span<const double> values,
                                   std::span<const double> weights, std::span<const PointId> centers, double r) {
  std::vector<LocalStats> out(centers.size());
  for_centers(centers.size(), [&](std::size_t i, std::vector<std::uint32_t>& local, StatsWorkspace& ws) {
    idx.query(Ball::at(centers[i], r), local);
    out[i] = ws.compute(values, local, weights);
  });
  return out;
}

std::vector<double> pair_cross(const PointIndex& a, std::span<const double> values_a, std::span<const double> weights_a,
                               const PointIndex& b, std::span<const double> values_b, std::span<const double> weights_b,
                               std::span<const std::pair<PointId, PointId>> pairs, double r) {
  std::vector<double> out(pairs.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> la, lb;
    StatsWorkspace ws;
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(pairs.size()); ++i) {
      const auto& [y, z] = pairs[static_cast<std::size_t>(i)];
      a.query(Ball::at(y, r), la);
      b.query(Ball::at(z, r), lb);
      out[static_cast<std::size_t>(i)] = ws.cross_average(values_a, la, weights_a, values_b, lb, weights_b);
    }
  }
  return out;
}

std::vector<double> ball_center_power(const PointIndex& idx, std::span<const double> values,
                                      std::span<const double> weights, std::span<const PointId> centers,
                                      std::span<const double> center_values, double r, double p) {
  std::vector<double> out(centers.size());
  for_centers(centers.size(), [&](std::size_t i, std::vector<std::uint32_t>& local, StatsWorkspace&) {
    idx.query(Ball::at(centers[i], r), local);
    double w = 0.0, s = 0.0;
    for (auto l : local) {
      w += weights[l];
      s += weights[l] * std::pow(std::abs(center_values[i] - values[l]), p);
    }
    out[i] = w > 0.0 ? s / w : 0.0;
  });
  return out;
}

std::vector<SortedList> sorted_ball_lists(const PointIndex& idx, std::span<const double> values,
                                          std::span<const double> weights, std::span<const PointId> centers,
                                          double r) {
  std::vector<SortedList> out(centers.size());
  for_centers(centers.size(), [&](std::size_t i, std::vector<std::uint32_t>& local, StatsWorkspace&) {
    idx.query(Ball::at(centers[i], r), local);
    auto& list = out[i];
    list.reserve(local.size());
    for (auto l : local) list.emplace_back(values[l], weights[l]);
    std::sort(list.begin(), list.end());
  });
  return out;
}

std::vector<double> cross_from_lists(std::span<const SortedList> a, std::span<const SortedList> b,
                                     std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::vector<double> out(pairs.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(pairs.size()); ++i) {
    const auto& [ia, ib] = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = StatsWorkspace::cross_sorted(a[ia], b[ib]);
  }
  return out;
}

namespace reference {

namespace {

std::vector<std::uint32_t> scan(const PointIndex& idx, PointId c, double r) {
  std::vector<std::uint32_t> out;
  const auto& m = idx.members();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (within(idx.space().distance(c, m[i]), r)) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace

std::vector<double> ball_mass(const PointIndex& idx, std::span<const double> weights,
                              std::span<const PointId> centers, double r) {
  std::vector<double> out;
  for (PointId c : centers) {
    double s = 0.0;
    for (auto l : scan(idx, c, r)) s += weights[l];
    out.push_back(s);
  }
  return out;
}

std::vector<double> ball_mean(const PointIndex& idx, std::span<const double> values, std::span<const double> weights,
                              std::span<const PointId> centers, double r) {
  std::vector<double> out;
  for (PointId c : centers) out.push_back(StatsWorkspace::mean(values, scan(idx, c, r), weights));
  return out;
}

std::vector<LocalStats> ball_stats(const PointIndex& idx, std::span<const double> values,
                                   std::span<const double> weights, std::span<const PointId> centers, double r) {
  std::vector<LocalStats> out;
  for (PointId c : centers) out.push_back(local_stats(values, scan(idx, c, r), weights));
  return out;
}

std::vector<double> pair_cross(const PointIndex& a, std::span<const double> values_a, std::span<const double> weights_a,
                               const PointIndex& b, std::span<const double> values_b, std::span<const double> weights_b,
                               std::span<const std::pair<PointId, PointId>> pairs, double r) {
  std::vector<double> out;
  StatsWorkspace ws;
  for (const auto& [y, z] : pairs)
    out.push_back(ws.cross_average(values_a, scan(a, y, r), weights_a, values_b, scan(b, z, r), weights_b));
  return out;
}

std::vector<double> ball_center_power(const PointIndex& idx, std::span<const double> values,
                                      std::span<const double> weights, std::span<const PointId> centers,
                                      std::span<const double> center_values, double r, double p) {
  std::vector<double> out;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double w = 0.0, s = 0.0;
    for (auto l : scan(idx, centers[i], r)) {
      w += weights[l];
      s += weights[l] * std::pow(std::abs(center_values[i] - values[l]), p);
    }
    out.push_back(w > 0.0 ? s / w : 0.0);
  }
  return out;
}

}  // namespace reference

}  // namespace mmtrace::kernels
