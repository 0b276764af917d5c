#pragma once

#include <string>
#include <vector>

#include "mmtrace/regularity.hpp"
#include "mmtrace/space.hpp"

namespace mmtrace {

/// Point clouds: header `mmspace v1; n=<int>; dim=<int>; h=<real>` (optional
/// `; c_res=<real>`), then one line `id x1 .. xdim weight` per point.
/// Matrix spaces: header `mmspace-matrix v1; n=<int>; h=<real>`, one line of
/// n weights, then rows i = 1..n-1 holding d(i, 0..i-1).
void write_space(const Space& space, const std::string& path);
Space read_space(const std::string& path);

/// Pieces as JSON: [{name, theta, ids, weights}, ...] in composition order.
void write_pieces(const PiecewiseSet& s, const std::string& path);
PiecewiseSet read_pieces(const Space& space, const std::string& path);

/// Function on S: header `mmfunction v1; n=<int>`, then `id value` lines.
/// Reading returns values in union order of `s`; every point of S must appear.
void write_function(const PiecewiseSet& s, const std::vector<double>& values, const std::string& path);
std::vector<double> read_function(const PiecewiseSet& s, const std::string& path);

/// %.17g
std::string format_real(double v);

}  // namespace mmtrace
