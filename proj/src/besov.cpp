#include <cmath>

#include "mmtrace/functionals.hpp"
#include "mmtrace/kernels.hpp"

namespace mmtrace {

double FunctionalReport::part(const std::string& key) const {
  for (const auto& [k, v] : parts)
    if (k == key) return v;
  fail(ErrorKind::InvalidParameter, "report '" + name + "' has no part '" + key + "'");
}

nlohmann::json to_json(const FunctionalReport& r) {
  nlohmann::json parts = nlohmann::json::object();
  for (const auto& [k, v] : r.parts) parts[k] = v;
  nlohmann::json j{{"name", r.name},   {"value", r.value},     {"parts", parts},
                   {"params", r.params}, {"truncation_tail", r.truncation_tail}};
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

int resolve_k_max(const Space& space, const ScaleOptions& opt) {
  const int top = space.max_scale();
  require(top >= 1, ErrorKind::ResolutionError, "scale floor leaves no scale k >= 1");
  if (!opt.k_max) return top;
  require(*opt.k_max >= 1, ErrorKind::InvalidParameter, "k_max must be >= 1");
  require(*opt.k_max <= top, ErrorKind::ResolutionError, "2^{-k_max} below the scale floor");
  return *opt.k_max;
}

namespace {

void check_piece_function(const SubsetPiece& piece, std::span<const double> f) {
  require(f.size() == piece.ids.size(), ErrorKind::InvalidParameter, "function must have one value per piece point");
}

double lp_norm(std::span<const double> f, std::span<const double> w, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]), p) * w[i];
  return std::pow(s, 1.0 / p);
}

template <typename Inner>
FunctionalReport besov_common(const char* name, const Space& space, const SubsetPiece& piece,
                              std::span<const double> f, double s, double p, ScaleOptions opt, Inner inner) {
  require(s > 0.0 && s < 1.0, ErrorKind::ParameterError, "smoothness s must lie in (0, 1)");
  require(p > 1.0 && std::isfinite(p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  check_piece_function(piece, f);
  const int K = resolve_k_max(space, opt);
  const PointIndex idx(space, piece.ids);
  double sum = 0.0, last = 0.0;
  for (int k = 1; k <= K; ++k) {
    const auto in = inner(idx, dyadic(k));
    double t = 0.0;
    for (std::size_t x = 0; x < in.size(); ++x) t += in[x] * piece.weights[x];
    t *= std::exp2(k * s * p);
    sum += t;
    last = t;
  }
  FunctionalReport r;
  r.name = name;
  const double lp = lp_norm(f, piece.weights, p);
  const double semi = std::pow(sum, 1.0 / p);
  r.parts = {{"lp", lp}, {"seminorm", semi}};
  r.value = lp + semi;
  r.params = {{"p", p}, {"s", s}, {"theta", piece.theta}, {"k_max", K}};
  r.truncation_tail = last;
  return r;
}

}  // namespace

FunctionalReport besov_norm(const Space& space, const SubsetPiece& piece, std::span<const double> f, double s,
                            double p, ScaleOptions opt) {
  return besov_common("besov", space, piece, f, s, p, opt, [&](const PointIndex& idx, double r) {
    const auto st = kernels::ball_stats(idx, f, piece.weights, piece.ids, r);
    std::vector<double> out(st.size());
    for (std::size_t x = 0; x < st.size(); ++x) out[x] = std::pow(st[x].best_dev, p);
    return out;
  });
}

FunctionalReport besov_norm_alt(const Space& space, const SubsetPiece& piece, std::span<const double> f, double s,
                                double p, ScaleOptions opt) {
  return besov_common("besov_alt", space, piece, f, s, p, opt, [&](const PointIndex& idx, double r) {
    return kernels::ball_center_power(idx, f, piece.weights, piece.ids, f, r, p);
  });
}

std::vector<double> averaging_single(const Space& space, const SubsetPiece& piece, std::span<const double> f, int k) {
  check_piece_function(piece, f);
  require(dyadic(k) >= space.scale_floor() * (1.0 - kBallSlack), ErrorKind::ResolutionError,
          "2^{-k} below the scale floor");
  const PointIndex idx(space, piece.ids);
  return kernels::ball_mean(idx, f, piece.weights, piece.ids, dyadic(k));
}

double averaging_double(const Space& space, const SubsetPiece& piece_i, std::span<const double> f_i,
                        const SubsetPiece& piece_j, std::span<const double> f_j, int k, PointId y, PointId z) {
  check_piece_function(piece_i, f_i);
  check_piece_function(piece_j, f_j);
  const PointIndex a(space, piece_i.ids), b(space, piece_j.ids);
  require(a.local_of(y) && b.local_of(z), ErrorKind::InvalidPair, "pair must lie in S^i x S^j");
  require(within(space.distance(y, z), dyadic(k)), ErrorKind::InvalidPair, "pair outside Sigma^{i,j}_k");
  StatsWorkspace ws;
  return ws.cross_average(f_i, a.query(Ball::at(y, dyadic(k))), piece_i.weights, f_j, b.query(Ball::at(z, dyadic(k))),
                          piece_j.weights);
}

double weight_w(const Space& space, int k, PointId y, PointId z, WeightKind kind) {
  require(dyadic(k) >= space.scale_floor() * (1.0 - kBallSlack), ErrorKind::ResolutionError,
          "2^{-k} below the scale floor");
  const double my = space.fast_mu(Ball::at(y, dyadic(k)));
  const double mz = space.fast_mu(Ball::at(z, dyadic(k)));
  require(my > 0.0 && mz > 0.0, ErrorKind::ZeroMass, "zero-mass ball in weight");
  if (kind == WeightKind::geometric) return 1.0 / (std::sqrt(my) * std::sqrt(mz));
  return 0.5 * (1.0 / my + 1.0 / mz);
}

}  // namespace mmtrace
