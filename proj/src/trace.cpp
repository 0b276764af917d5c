#include <cmath>

#include "mmtrace/functionals.hpp"

namespace mmtrace {

FunctionalReport trace_norm_simple(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p,
                                   int l, ScaleOptions opt, const GluingCache* cache) {
  require(s.piece(0).theta > 0.0, ErrorKind::ParameterError, "theta_1 = 0: use the difficult-case norm");
  s.check_trace_exponent(p);
  FunctionalReport r;
  r.name = "trace_simple";
  double total = 0.0;
  for (std::size_t i = 0; i < s.N(); ++i) {
    const auto fi = s.restrict_to_piece(f, i);
    const auto b = besov_norm(space, s.piece(i), fi, 1.0 - s.piece(i).theta / p, p, opt);
    r.parts.emplace_back("besov_" + s.piece(i).name, b.value);
    r.truncation_tail += b.truncation_tail;
    total += b.value;
  }
  const auto gl = gluing(space, s, f, p, l, opt, WeightKind::geometric, cache);
  r.parts.emplace_back("gl", gl.value);
  r.truncation_tail += gl.truncation_tail;
  r.value = total + gl.value;
  r.params = {{"p", p}, {"l", l}, {"k_max", resolve_k_max(space, opt)}};
  return r;
}

FunctionalReport trace_norm_difficult(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p,
                                      ScaleOptions opt, const GluingCache* cache) {
  require(s.N() == 2 && s.piece(0).theta == 0.0 && s.piece(1).theta > 0.0, ErrorKind::ParameterError,
          "difficult case needs two pieces with theta_1 = 0 < theta_2");
  s.check_trace_exponent(p);
  const auto& s1 = s.piece(0);
  const auto f1 = s.restrict_to_piece(f, 0);
  const auto sharp = s.restrict_to_piece(sharp_mu_s1(space, s, f, opt), 0);
  double lp = 0.0, sh = 0.0;
  for (std::size_t a = 0; a < s1.ids.size(); ++a) {
    const double w = space.weight(s1.ids[a]);
    lp += std::pow(std::abs(f1[a]), p) * w;
    sh += std::pow(sharp[a], p) * w;
  }
  lp = std::pow(lp, 1.0 / p);
  sh = std::pow(sh, 1.0 / p);
  const auto b = besov_norm(space, s.piece(1), s.restrict_to_piece(f, 1), 1.0 - s.piece(1).theta / p, p, opt);
  const auto gl = gluing(space, s, f, p, 3, opt, WeightKind::geometric, cache);
  FunctionalReport r;
  r.name = "trace_difficult";
  r.parts = {{"lp_s1", lp}, {"sharp_s1", sh}, {"besov_s2", b.value}, {"gl3", gl.value}};
  r.value = lp + sh + b.value + gl.value;
  r.truncation_tail = b.truncation_tail + gl.truncation_tail;
  r.params = {{"p", p}, {"k_max", resolve_k_max(space, opt)}};
  return r;
}

}  // namespace mmtrace
