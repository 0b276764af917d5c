#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mmtrace/experiments.hpp"
#include "mmtrace/io.hpp"

namespace mmtrace {

namespace {

const std::vector<std::string> kFunctionals = {"besov", "besov_alt", "gl1", "gl2", "gl3", "bn",
                                               "bsn", "sharp", "trace_simple", "trace_difficult", "dirichlet"};

bool wants(const ExperimentConfig& cfg, const std::string& name) {
  return std::find(cfg.functionals.begin(), cfg.functionals.end(), name) != cfg.functionals.end();
}

double theta_used(const ExperimentConfig& cfg, const PiecewiseSet& s) { return cfg.theta.value_or(s.theta_S()); }

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  constexpr double eps = 0.5;
  require(cfg.p > 1.0 && std::isfinite(cfg.p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  require(cfg.c >= 3.0 / eps, ErrorKind::ParameterError, "c must be >= 3/eps = 6");
  require(cfg.sigma > 0.0 && cfg.sigma < eps * eps / (4.0 * cfg.c), ErrorKind::ParameterError,
          "sigma must lie in (0, eps^2/(4c))");
  require(!cfg.resolutions.empty(), ErrorKind::ParameterError, "no resolutions");
  for (double h : cfg.resolutions) require(h > 0.0, ErrorKind::ParameterError, "resolutions must be positive");
  require(!cfg.functionals.empty(), ErrorKind::ParameterError, "no functionals requested");
  for (const auto& f : cfg.functionals)
    require(std::find(kFunctionals.begin(), kFunctionals.end(), f) != kFunctionals.end(), ErrorKind::ParameterError,
            "unknown functional '" + f + "'");
  require(!cfg.l.empty(), ErrorKind::ParameterError, "no gluing index l");
  for (int l : cfg.l) require(l >= 1 && l <= 3, ErrorKind::ParameterError, "l must be 1, 2 or 3");
  require(cfg.instance.find(',') == std::string::npos, ErrorKind::ParameterError, "instance name must not contain ','");
  require(!cfg.generator.pieces.empty(), ErrorKind::ParameterError, "generator has no pieces");
  double theta_n = -1.0, theta_1 = cfg.generator.pieces.front().theta;
  for (const auto& p : cfg.generator.pieces) {
    require(p.theta > theta_n, ErrorKind::ParameterError, "piece codimensions must be strictly increasing");
    theta_n = p.theta;
  }
  require(theta_n < cfg.p, ErrorKind::ParameterError, "theta_N must be below p");
  if (cfg.theta)
    require(*cfg.theta >= theta_n && *cfg.theta < cfg.p, ErrorKind::ParameterError, "theta must lie in [theta_N, p)");
  if (wants(cfg, "trace_simple"))
    require(theta_1 > 0.0, ErrorKind::ParameterError, "trace_simple needs theta_1 > 0");
  if (wants(cfg, "trace_difficult") || wants(cfg, "sharp"))
    require(theta_1 == 0.0, ErrorKind::ParameterError, "trace_difficult and sharp need theta_1 = 0");
  if (wants(cfg, "trace_difficult"))
    require(cfg.generator.pieces.size() == 2, ErrorKind::ParameterError, "trace_difficult needs two pieces");
  if (cfg.k_max) require(*cfg.k_max >= 1, ErrorKind::ParameterError, "k_max must be >= 1");
}

std::vector<FunctionalReport> compute_functionals(const Instance& inst, const ExperimentConfig& cfg,
                                                  const std::vector<double>& on_space) {
  const Space& space = inst.space;
  const PiecewiseSet& s = inst.s;
  const auto f = restrict_to_s(s, on_space);
  const ScaleOptions opt{cfg.k_max};
  const int K = resolve_k_max(space, opt);
  const double p = cfg.p;

  std::optional<GluingCache> cache;
  auto gl_cache = [&]() -> const GluingCache* {
    if (s.N() < 2) return nullptr;
    if (!cache) cache.emplace(s, K);
    return &*cache;
  };
  std::optional<MeasureSequence> seq;
  auto sequence = [&]() -> const MeasureSequence& {
    if (!seq) seq = build_measure_sequence(s, theta_used(cfg, s), K, p);
    return *seq;
  };

  std::vector<FunctionalReport> out;
  for (const auto& name : cfg.functionals) {
    if (name == "besov" || name == "besov_alt") {
      for (std::size_t i = 0; i < s.N(); ++i) {
        const auto& P = s.piece(i);
        if (!(P.theta > 0.0)) continue;
        const auto fi = s.restrict_to_piece(f, i);
        auto r = name == "besov" ? besov_norm(space, P, fi, 1.0 - P.theta / p, p, opt)
                                 : besov_norm_alt(space, P, fi, 1.0 - P.theta / p, p, opt);
        r.name = name + ":" + P.name;
        out.push_back(std::move(r));
      }
    } else if (name == "gl1" || name == "gl2" || name == "gl3") {
      out.push_back(gluing(space, s, f, p, name[2] - '0', opt, WeightKind::geometric, gl_cache()));
    } else if (name == "bn") {
      out.push_back(bn_functional(sequence(), s, f, p, cfg.sigma, cfg.c));
    } else if (name == "bsn") {
      SearchOptions so;
      so.budget = cfg.budget;
      out.push_back(bsn_functional(sequence(), f, p, cfg.c, so));
    } else if (name == "sharp") {
      const auto sh = s.restrict_to_piece(sharp_mu_s1(space, s, f, opt), 0);
      double sum = 0.0;
      for (std::size_t a = 0; a < sh.size(); ++a) sum += std::pow(sh[a], p) * space.weight(s.piece(0).ids[a]);
      FunctionalReport r;
      r.name = "sharp";
      r.value = std::pow(sum, 1.0 / p);
      r.params = {{"p", p}, {"k_max", K}};
      out.push_back(std::move(r));
    } else if (name == "trace_simple") {
      for (int l : cfg.l) {
        auto r = trace_norm_simple(space, s, f, p, l, opt, gl_cache());
        r.name = "trace_simple_l" + std::to_string(l);
        out.push_back(std::move(r));
      }
    } else if (name == "trace_difficult") {
      out.push_back(trace_norm_difficult(space, s, f, p, opt, gl_cache()));
    } else if (name == "dirichlet") {
      const auto d = dirichlet_upper_bound_probe(space, on_space, p, s, cfg.l.front());
      FunctionalReport r;
      r.name = "dirichlet";
      r.value = d.ratio;
      r.parts = {{"trace", d.trace}, {"lp", d.lp}, {"energy", d.energy}};
      r.params = {{"p", p}, {"l", cfg.l.front()}};
      out.push_back(std::move(r));
    } else {
      fail(ErrorKind::ParameterError, "unknown functional '" + name + "'");
    }
  }
  return out;
}

ExperimentResult run_equivalence(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult res;
  // (label, seed, h) -> totals by report name
  std::map<std::tuple<std::string, std::uint64_t, double>, std::map<std::string, double>> totals;
  std::vector<std::string> first_names;

  for (double h : cfg.resolutions) {
    GeneratorSpec g = cfg.generator;
    g.h = h;
    const Instance inst = generate(g);
    const double theta = theta_used(cfg, inst.s);
    for (const auto& fn : cfg.functions) {
      const std::string label = cfg.instance + "/" + fn.label();
      const std::vector<std::uint64_t> seeds =
          fn.family == "random" ? cfg.seeds : std::vector<std::uint64_t>{0};
      for (auto seed : seeds) {
        const auto F = sample_on_space(inst.space, fn, seed);
        auto reports = compute_functionals(inst, cfg, F);
        if (first_names.empty())
          for (const auto& r : reports) first_names.push_back(r.name);
        auto& tot = totals[{label, seed, h}];
        for (auto& r : reports) {
          const double th = r.params.count("theta") ? r.params.at("theta") : theta;
          res.rows.push_back({label, h, r.name, r.value, "total", cfg.p, th, cfg.c, cfg.sigma, seed});
          for (const auto& [k, v] : r.parts) res.rows.push_back({label, h, r.name, v, k, cfg.p, th, cfg.c, cfg.sigma, seed});
          tot[r.name] = r.value;
          res.reports.push_back(std::move(r));
        }
      }
    }
  }

  auto pairs = cfg.ratios;
  if (pairs.empty())
    for (std::size_t a = 1; a < first_names.size(); ++a) pairs.emplace_back(first_names[a], first_names[0]);

  // Ratio rows in (label, seed, pair, h) order; stability over h.
  std::map<std::tuple<std::string, std::uint64_t, std::string, std::string>, std::vector<RatioRow>> grouped;
  for (const auto& [key, tot] : totals) {
    const auto& [label, seed, h] = key;
    for (const auto& [a, b] : pairs) {
      auto ia = tot.find(a), ib = tot.find(b);
      require(ia != tot.end() && ib != tot.end(), ErrorKind::ParameterError,
              "ratio " + a + "/" + b + " names a functional that was not computed");
      RatioRow row{label, seed, h, a, b, 0.0, false};
      if (ib->second == 0.0 || !std::isfinite(ib->second) || !std::isfinite(ia->second)) {
        row.degenerate = true;
        row.ratio = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.ratio = ia->second / ib->second;
      }
      grouped[{label, seed, a, b}].push_back(row);
    }
  }
  for (auto& [key, rows] : grouped) {
    std::sort(rows.begin(), rows.end(), [](const RatioRow& x, const RatioRow& y) { return x.resolution > y.resolution; });
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool degenerate = false;
    for (const auto& r : rows) {
      degenerate = degenerate || r.degenerate;
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
      res.ratios.rows.push_back(r);
    }
    res.ratios.stability[key] = degenerate || !(lo > 0.0) ? std::numeric_limits<double>::quiet_NaN() : hi / lo - 1.0;
  }
  return res;
}

DirichletProbe dirichlet_upper_bound_probe(const Space& space, const std::vector<double>& F, double p,
                                           const PiecewiseSet& s, int l) {
  require(F.size() == space.size(), ErrorKind::InvalidParameter, "extension must cover the space");
  require(p > 1.0 && std::isfinite(p), ErrorKind::ParameterError, "p must lie in (1, inf)");
  const std::size_t n = space.size();
  const double mesh = space.resolution();
  std::vector<double> lip(n, 0.0);
  std::vector<char> lonely(n, 0);
#pragma omp parallel
  {
    std::vector<std::uint32_t> local;
#pragma omp for schedule(static)
    for (std::int64_t a = 0; a < static_cast<std::int64_t>(n); ++a) {
      const auto x = static_cast<PointId>(a);
      space.index().query(Ball::at(x, mesh), local);
      double best = 0.0;
      bool any = false;
      for (auto q : local) {
        const PointId y = space.index().members()[q];
        if (y == x) continue;
        any = true;
        best = std::max(best, std::abs(F[x] - F[y]) / space.distance(x, y));
      }
      lip[x] = best;
      lonely[x] = any ? 0 : 1;
    }
  }
  for (char c : lonely) require(!c, ErrorKind::InsufficientData, "a point has no mesh neighbor");
  DirichletProbe d;
  for (PointId x = 0; x < n; ++x) {
    d.lp += std::pow(std::abs(F[x]), p) * space.weight(x);
    d.energy += std::pow(lip[x], p) * space.weight(x);
  }
  d.lp = std::pow(d.lp, 1.0 / p);
  const auto f = restrict_to_s(s, F);
  d.trace = s.piece(0).theta > 0.0 ? trace_norm_simple(space, s, f, p, l).value : trace_norm_difficult(space, s, f, p).value;
  const double denom = d.lp + std::pow(d.energy, 1.0 / p);
  d.ratio = d.trace == 0.0 ? 0.0 : d.trace / denom;
  return d;
}

// ---------------------------------------------------------------- reports

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.instance + "," + format_real(r.resolution) + "," + r.functional + "," + format_real(r.value) + "," +
           r.part + "," + format_real(r.p) + "," + format_real(r.theta) + "," + format_real(r.c) + "," +
           format_real(r.sigma) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<ResultRow> rows_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  require(static_cast<bool>(std::getline(ss, line)) && line == kCsvHeader, ErrorKind::IoError,
          "CSV header does not match");
  std::vector<ResultRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) c.push_back(cell);
    require(c.size() == 10, ErrorKind::IoError, "CSV row must have 10 columns");
    try {
      rows.push_back({c[0], std::stod(c[1]), c[2], std::stod(c[3]), c[4], std::stod(c[5]), std::stod(c[6]),
                      std::stod(c[7]), std::stod(c[8]), std::stoull(c[9])});
    } catch (const std::exception&) {
      fail(ErrorKind::IoError, "malformed CSV row '" + line + "'");
    }
  }
  return rows;
}

nlohmann::json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    if (r.part == "total" || out.empty()) {
      out.push_back({{"instance", r.instance},
                     {"resolution", r.resolution},
                     {"seed", r.seed},
                     {"name", r.functional},
                     {"value", r.part == "total" ? r.value : 0.0},
                     {"parts", nlohmann::json::object()},
                     {"params", {{"p", r.p}, {"theta", r.theta}, {"c", r.c}, {"sigma", r.sigma}}}});
      if (r.part == "total") continue;
    }
    out.back()["parts"][r.part] = r.value;
  }
  return out;
}

std::string ratios_to_csv(const RatioReport& r) {
  std::string out = "instance,seed,resolution,functional_a,functional_b,ratio,degenerate\n";
  for (const auto& row : r.rows)
    out += row.instance + "," + std::to_string(row.seed) + "," + format_real(row.resolution) + "," + row.a + "," +
           row.b + "," + format_real(row.ratio) + "," + (row.degenerate ? "1" : "0") + "\n";
  return out;
}

std::string stability_to_csv(const RatioReport& r) {
  std::string out = "instance,seed,functional_a,functional_b,stability\n";
  for (const auto& [key, v] : r.stability) {
    const auto& [label, seed, a, b] = key;
    out += label + "," + std::to_string(seed) + "," + a + "," + b + "," + format_real(v) + "\n";
  }
  return out;
}

void report_emit(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path) {
  if (format == "csv")
    write_text(path, rows_to_csv(rows));
  else if (format == "json")
    write_text(path, rows_to_json(rows).dump(1) + "\n");
  else
    fail(ErrorKind::ParameterError, "format must be csv or json");
}

}  // namespace mmtrace
