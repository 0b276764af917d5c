#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "mmtrace/errors.hpp"
#include "mmtrace/space.hpp"

#define CHECK_KIND(expr, kind_)                                  \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const mmtrace::Error& e_) {                         \
      thrown_ = true;                                            \
      CHECK(e_.kind() == mmtrace::ErrorKind::kind_);             \
    }                                                            \
    CHECK_MESSAGE(thrown_, "expected " #kind_ " from " #expr);   \
  } while (0)

namespace testutil {

/// n points on [0, (n-1) step] with equal weights 1/n.
inline mmtrace::Space line(std::size_t n, double step, double resolution = -1.0) {
  std::vector<double> c(n), w(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<double>(i) * step;
  return mmtrace::Space::from_coords(1, c, w, resolution > 0 ? resolution : step);
}

inline std::vector<mmtrace::PointId> all_ids(const mmtrace::Space& s) {
  std::vector<mmtrace::PointId> v(s.size());
  std::iota(v.begin(), v.end(), mmtrace::PointId{0});
  return v;
}

}  // namespace testutil

namespace testutil {

/// Uniform grid on [0,1]^dim with step h, axis 0 fastest, weights h^dim.
inline mmtrace::Space grid(std::size_t dim, double h) {
  const auto m = static_cast<std::size_t>(std::lround(1.0 / h)) + 1;
  std::size_t n = 1;
  for (std::size_t a = 0; a < dim; ++a) n *= m;
  std::vector<double> c(n * dim), w(n, std::pow(h, static_cast<double>(dim)));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = i;
    for (std::size_t a = 0; a < dim; ++a) {
      c[i * dim + a] = static_cast<double>(r % m) * h;
      r /= m;
    }
  }
  return mmtrace::Space::from_coords(dim, c, w, h);
}

}  // namespace testutil
