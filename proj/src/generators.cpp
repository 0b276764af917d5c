#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mmtrace/experiments.hpp"
#include "mmtrace/io.hpp"

namespace mmtrace {

std::size_t GeneratorSpec::dim() const {
  if (kind == "grid1d") return 1;
  if (kind == "grid2d") return 2;
  if (kind == "grid3d") return 3;
  fail(ErrorKind::ParameterError, "unknown generator kind '" + kind + "'");
}

namespace {

constexpr double kCoordTol = 1e-9;

bool in_box(std::span<const double> x, const PieceSpec& p) {
  for (std::size_t a = 0; a < x.size(); ++a)
    if (x[a] < p.lo[a] - kCoordTol || x[a] > p.hi[a] + kCoordTol) return false;
  return true;
}

std::size_t expected_intrinsic(const std::string& shape, std::size_t dim) {
  if (shape == "segment") return 1;
  if (shape == "square_face") return 2;
  if (shape == "region" || shape == "point_cluster") return dim;
  fail(ErrorKind::ParameterError, "unknown piece shape '" + shape + "'");
}

SubsetPiece build_piece(const Space& space, const PieceSpec& p, double h) {
  const std::size_t dim = space.dim();
  const std::size_t want = expected_intrinsic(p.shape, dim);
  require(p.theta >= 0.0 && p.theta < static_cast<double>(dim), ErrorKind::ParameterError,
          "piece '" + p.name + "': theta must lie in [0, ambient dimension)");
  require(want <= dim, ErrorKind::ParameterError, "piece '" + p.name + "' does not fit the ambient dimension");
  require(std::abs(p.theta - static_cast<double>(dim - want)) < 1e-12, ErrorKind::ParameterError,
          "piece '" + p.name + "': theta must equal ambient minus intrinsic dimension");

  std::vector<PointId> ids;
  std::vector<double> w;
  if (p.shape == "point_cluster") {
    require(p.center.size() == dim && p.radius >= 0.0, ErrorKind::ParameterError,
            "point_cluster needs center (one value per axis) and radius >= 0");
    for (PointId i = 0; i < space.size(); ++i)
      if (within(space.distance_to(p.center, i), p.radius + kCoordTol)) {
        ids.push_back(i);
        w.push_back(space.weight(i));
      }
  } else {
    require(p.lo.size() == dim && p.hi.size() == dim, ErrorKind::ParameterError,
            "piece '" + p.name + "' needs lo and hi with one value per axis");
    std::size_t varying = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      require(p.lo[a] <= p.hi[a] && p.lo[a] >= -kCoordTol && p.hi[a] <= 1.0 + kCoordTol, ErrorKind::ParameterError,
              "piece '" + p.name + "' box must satisfy 0 <= lo <= hi <= 1");
      if (p.hi[a] > p.lo[a] + kCoordTol) ++varying;
    }
    require(varying == want, ErrorKind::ParameterError, "piece '" + p.name + "' box does not match its shape");
    for (PointId i = 0; i < space.size(); ++i) {
      const auto x = space.coords(i);
      if (!in_box(x, p)) continue;
      double wt = p.theta == 0.0 ? space.weight(i) : 1.0;
      if (p.theta > 0.0)
        for (std::size_t a = 0; a < dim; ++a) {
          if (!(p.hi[a] > p.lo[a] + kCoordTol)) continue;
          const bool end = x[a] - p.lo[a] < h / 2 || p.hi[a] - x[a] < h / 2;
          wt *= end ? h / 2 : h;
        }
      ids.push_back(i);
      w.push_back(wt);
    }
  }
  require(!ids.empty(), ErrorKind::ParameterError, "piece '" + p.name + "' contains no grid point");
  return make_piece(space, p.name, std::move(ids), p.theta, std::move(w));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Instance generate(const GeneratorSpec& spec) {
  const std::size_t dim = spec.dim();
  require(spec.h > 0.0 && spec.h <= 0.5, ErrorKind::ParameterError, "mesh h must lie in (0, 1/2]");
  const double steps = std::round(1.0 / spec.h);
  require(std::abs(steps * spec.h - 1.0) < 1e-9, ErrorKind::ParameterError, "1/h must be an integer");
  require(!spec.pieces.empty(), ErrorKind::ParameterError, "generator needs at least one piece");
  const auto per_axis = static_cast<std::size_t>(steps) + 1;
  std::size_t n = 1;
  for (std::size_t a = 0; a < dim; ++a) n *= per_axis;
  // Trapezoid cells: half width on each boundary axis, so mu(X) = 1.
  std::vector<double> coords(n * dim), weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    double w = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const std::size_t j = rest % per_axis;
      coords[i * dim + a] = static_cast<double>(j) / steps;
      w *= (j == 0 || j + 1 == per_axis) ? 0.5 * spec.h : spec.h;
      rest /= per_axis;
    }
    weights[i] = w;
  }
  Space space = Space::from_coords(dim, std::move(coords), std::move(weights), spec.h, spec.c_res);

  std::vector<SubsetPiece> pieces;
  for (const auto& p : spec.pieces) pieces.push_back(build_piece(space, p, spec.h));
  Instance inst{space, PiecewiseSet{}, {}};
  if (spec.check_adr) {
    const auto grid = default_r_grid(space);
    for (auto& p : pieces) {
      inst.adr.push_back(check_adr(space, p, grid));
      p.adr_constants = std::make_pair(inst.adr.back().kappa1, inst.adr.back().kappa2);
      p.verified = inst.adr.back().ok;
    }
  }
  inst.s = compose_piecewise(space, std::move(pieces));
  return inst;
}

GeneratorSpec simple_case_spec(double h) {
  GeneratorSpec g;
  g.kind = "grid3d";
  g.h = h;
  g.pieces.push_back({"face", "square_face", 1.0, {0.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, {}, 0.0});
  g.pieces.push_back({"segment", "segment", 2.0, {0.5, 0.5, 0.0}, {0.5, 0.5, 1.0}, {}, 0.0});
  return g;
}

GeneratorSpec difficult_case_spec(double h) {
  GeneratorSpec g;
  g.kind = "grid2d";
  g.h = h;
  g.pieces.push_back({"region", "region", 0.0, {0.0, 0.0}, {0.5, 1.0}, {}, 0.0});
  g.pieces.push_back({"segment", "segment", 1.0, {0.5, 0.5}, {1.0, 0.5}, {}, 0.0});
  return g;
}

// ---------------------------------------------------------------- sample functions

std::string FunctionSpec::label() const {
  if (family != "hoelder") return family;
  char buf[32];
  std::snprintf(buf, sizeof buf, "hoelder:%g", alpha);
  return buf;
}

FunctionSpec FunctionSpec::parse(const std::string& text) {
  FunctionSpec f;
  const auto colon = text.find(':');
  f.family = trim(text.substr(0, colon));
  if (f.family == "hoelder") {
    if (colon != std::string::npos) {
      try {
        f.alpha = std::stod(text.substr(colon + 1));
      } catch (const std::exception&) {
        fail(ErrorKind::ParameterError, "bad Hoelder exponent in '" + text + "'");
      }
    }
    require(f.alpha > 0.0 && f.alpha <= 1.0, ErrorKind::ParameterError, "Hoelder exponent must lie in (0, 1]");
  } else {
    require(colon == std::string::npos, ErrorKind::ParameterError, "only hoelder takes a parameter");
    require(f.family == "constant" || f.family == "linear" || f.family == "step" || f.family == "random",
            ErrorKind::ParameterError, "unknown function family '" + f.family + "'");
  }
  return f;
}

std::vector<double> sample_on_space(const Space& space, const FunctionSpec& fn, std::uint64_t seed) {
  require(space.has_coords(), ErrorKind::ParameterError, "sample functions need coordinates");
  const std::size_t n = space.size(), dim = space.dim();
  std::vector<double> out(n, 0.0);
  if (fn.family == "random") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : out) v = u(rng);
    return out;
  }
  for (PointId i = 0; i < n; ++i) {
    const auto x = space.coords(i);
    double v = 0.0;
    if (fn.family == "constant") {
      v = 1.0;
    } else if (fn.family == "linear") {
      for (std::size_t a = 0; a < dim; ++a) v += std::ldexp(x[a], -static_cast<int>(a));
    } else if (fn.family == "hoelder") {
      for (std::size_t a = 0; a < dim; ++a) v += std::pow(std::abs(x[a] - 0.5), fn.alpha);
    } else if (fn.family == "step") {
      v = x[0] > 0.5 ? 1.0 : 0.0;
    } else {
      fail(ErrorKind::ParameterError, "unknown function family '" + fn.family + "'");
    }
    out[i] = v;
  }
  return out;
}

std::vector<double> restrict_to_s(const PiecewiseSet& s, const std::vector<double>& on_space) {
  require(on_space.size() == s.space().size(), ErrorKind::InvalidParameter, "extension must cover the space");
  std::vector<double> out;
  out.reserve(s.union_ids().size());
  for (auto id : s.union_ids()) out.push_back(on_space[id]);
  return out;
}

// ---------------------------------------------------------------- config

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::ParameterError,
            "config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorKind::ParameterError, "config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::IoError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
  require(out.good(), ErrorKind::IoError, "write failed for '" + path + "'");
}

KeyValues read_key_values(const std::string& path) { return parse_key_values(read_text(path)); }

namespace {

// Accepts plain reals and fractions such as 1/16.
double parse_real(const std::string& key, const std::string& s) {
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } else {
      const auto a = trim(s.substr(0, slash)), b = trim(s.substr(slash + 1));
      std::size_t ua = 0, ub = 0;
      const double num = std::stod(a, &ua), den = std::stod(b, &ub);
      if (ua == a.size() && ub == b.size()) return num / den;
    }
  } catch (const std::exception&) {
  }
  fail(ErrorKind::ParameterError, "key '" + key + "': '" + s + "' is not a number");
}

std::vector<double> parse_reals(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split_list(s)) out.push_back(parse_real(key, t));
  return out;
}

long long parse_int(const std::string& key, const std::string& s) {
  const double v = parse_real(key, s);
  require(v == std::floor(v) && std::abs(v) < 9e15, ErrorKind::ParameterError, "key '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorKind::ParameterError, "key '" + key + "' must be true or false");
}

const std::string* find(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

}  // namespace

GeneratorSpec generator_from_config(const KeyValues& kv) {
  GeneratorSpec g;
  if (auto v = find(kv, "generator.preset")) {
    if (*v == "simple")
      g = simple_case_spec(g.h);
    else if (*v == "difficult")
      g = difficult_case_spec(g.h);
    else
      fail(ErrorKind::ParameterError, "unknown generator preset '" + *v + "'");
  }
  if (auto v = find(kv, "generator.kind")) g.kind = *v;
  if (auto v = find(kv, "generator.h")) g.h = parse_real("generator.h", *v);
  if (auto v = find(kv, "generator.c_res")) g.c_res = parse_real("generator.c_res", *v);
  if (auto v = find(kv, "generator.adr")) g.check_adr = parse_bool("generator.adr", *v);
  if (find(kv, "piece.1.shape")) g.pieces.clear();
  for (int n = 1;; ++n) {
    const std::string pre = "piece." + std::to_string(n) + ".";
    const auto shape = find(kv, pre + "shape");
    if (!shape) break;
    PieceSpec p;
    p.shape = *shape;
    p.name = find(kv, pre + "name") ? *find(kv, pre + "name") : "piece" + std::to_string(n);
    const auto theta = find(kv, pre + "theta");
    require(theta != nullptr, ErrorKind::ParameterError, "missing " + pre + "theta");
    p.theta = parse_real(pre + "theta", *theta);
    if (auto v = find(kv, pre + "lo")) p.lo = parse_reals(pre + "lo", *v);
    if (auto v = find(kv, pre + "hi")) p.hi = parse_reals(pre + "hi", *v);
    if (auto v = find(kv, pre + "center")) p.center = parse_reals(pre + "center", *v);
    if (auto v = find(kv, pre + "radius")) p.radius = parse_real(pre + "radius", *v);
    g.pieces.push_back(std::move(p));
  }
  return g;
}

ExperimentConfig experiment_from_config(const KeyValues& kv) {
  static const std::vector<std::string> known = {
      "instance", "resolutions", "p",     "theta",  "c",     "sigma", "l",
      "functionals", "functions", "seeds", "ratios", "budget", "k_max"};
  for (const auto& [k, v] : kv) {
    (void)v;
    const bool ok = k.rfind("generator.", 0) == 0 || k.rfind("piece.", 0) == 0 ||
                    std::find(known.begin(), known.end(), k) != known.end();
    require(ok, ErrorKind::ParameterError, "unknown config key '" + k + "'");
  }
  ExperimentConfig cfg;
  cfg.generator = generator_from_config(kv);
  if (auto v = find(kv, "instance")) cfg.instance = *v;
  if (auto v = find(kv, "resolutions"))
    cfg.resolutions = parse_reals("resolutions", *v);
  else
    cfg.resolutions = {cfg.generator.h};
  if (auto v = find(kv, "p")) cfg.p = parse_real("p", *v);
  if (auto v = find(kv, "theta")) cfg.theta = parse_real("theta", *v);
  if (auto v = find(kv, "c")) cfg.c = parse_real("c", *v);
  if (auto v = find(kv, "sigma")) cfg.sigma = parse_real("sigma", *v);
  if (auto v = find(kv, "l")) {
    cfg.l.clear();
    for (const auto& t : split_list(*v)) cfg.l.push_back(static_cast<int>(parse_int("l", t)));
  }
  if (auto v = find(kv, "functionals")) cfg.functionals = split_list(*v);
  if (auto v = find(kv, "functions"))
    for (const auto& t : split_list(*v)) cfg.functions.push_back(FunctionSpec::parse(t));
  if (cfg.functions.empty()) cfg.functions.push_back(FunctionSpec{});
  if (auto v = find(kv, "seeds")) {
    cfg.seeds.clear();
    for (const auto& t : split_list(*v)) {
      const auto s = parse_int("seeds", t);
      require(s >= 0, ErrorKind::ParameterError, "seeds must be non-negative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (auto v = find(kv, "ratios"))
    for (const auto& t : split_list(*v)) {
      const auto slash = t.find('/');
      require(slash != std::string::npos, ErrorKind::ParameterError, "ratio '" + t + "' must read a/b");
      cfg.ratios.emplace_back(trim(t.substr(0, slash)), trim(t.substr(slash + 1)));
    }
  if (auto v = find(kv, "budget")) {
    const auto b = parse_int("budget", *v);
    require(b >= 0, ErrorKind::ParameterError, "budget must be non-negative");
    cfg.budget = static_cast<std::size_t>(b);
  }
  if (auto v = find(kv, "k_max")) cfg.k_max = static_cast<int>(parse_int("k_max", *v));
  return cfg;
}

}  // namespace mmtrace
