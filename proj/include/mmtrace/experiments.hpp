#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mmtrace/functionals.hpp"
#include "mmtrace/measures.hpp"
#include "mmtrace/regularity.hpp"

namespace mmtrace {

// ---------------------------------------------------------------- generators

/// An axis-aligned box [lo, hi] of the unit cube; the intrinsic dimension is
/// the number of axes with lo < hi. point_cluster uses center and radius.
struct PieceSpec {
  std::string name;
  std::string shape;  // segment | square_face | region | point_cluster
  double theta = 0.0;
  std::vector<double> lo, hi;
  std::vector<double> center;
  double radius = 0.0;
};

struct GeneratorSpec {
  std::string kind = "grid2d";  // grid1d | grid2d | grid3d
  double h = 0.0625;
  double c_res = 1.0;
  std::vector<PieceSpec> pieces;
  bool check_adr = true;

  std::size_t dim() const;
};

struct Instance {
  Space space;
  PiecewiseSet s;
  std::vector<AdrReport> adr;  // one per piece when check_adr is set
};

/// Grid on [0,1]^dim with step h and weights h^dim. Pieces with theta > 0 carry
/// trapezoid weights h^{dim - theta} (halved per axis at box ends); theta = 0
/// pieces carry the space weights.
Instance generate(const GeneratorSpec& spec);

/// The two default instances: grid3d face (theta 1) + segment (theta 2), and
/// grid2d region (theta 0) + segment (theta 1).
GeneratorSpec simple_case_spec(double h);
GeneratorSpec difficult_case_spec(double h);

// ---------------------------------------------------------------- sample functions

struct FunctionSpec {
  std::string family = "linear";  // constant | linear | hoelder | step | random
  double alpha = 0.6;

  std::string label() const;
  static FunctionSpec parse(const std::string& text);  // "hoelder:0.3", "random", ...
};

/// Values of the sample at every point of the space (the extension F).
/// random draws one uniform [0,1) value per point in id order from mt19937_64(seed).
std::vector<double> sample_on_space(const Space& space, const FunctionSpec& fn, std::uint64_t seed);

/// F restricted to S, in union order.
std::vector<double> restrict_to_s(const PiecewiseSet& s, const std::vector<double>& on_space);

// ---------------------------------------------------------------- config

/// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

/// generator.kind, generator.h, generator.c_res, generator.adr and
/// piece.<n>.{name, shape, theta, lo, hi, center, radius}, n = 1, 2, ...
GeneratorSpec generator_from_config(const KeyValues& kv);

struct ExperimentConfig {
  std::string instance = "instance";
  GeneratorSpec generator;
  std::vector<double> resolutions;
  double p = 2.5;
  std::optional<double> theta;  // measure-sequence theta; theta_N when unset
  double c = 6.0;
  double sigma = 0.01;
  std::vector<int> l{1};
  std::vector<std::string> functionals;
  std::vector<FunctionSpec> functions;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::pair<std::string, std::string>> ratios;
  std::size_t budget = 200000;
  std::optional<int> k_max;
};

ExperimentConfig experiment_from_config(const KeyValues& kv);

/// Throws ParameterError unless p > 1, c >= 3/eps = 6, 0 < sigma < eps^2/(4c),
/// theta_N < p, and the functional names and l values are known.
void validate_config(const ExperimentConfig& cfg);

// ---------------------------------------------------------------- experiments

struct ResultRow {
  std::string instance;
  double resolution = 0.0;
  std::string functional;
  double value = 0.0;
  std::string part;  // "total" or a part key
  double p = 0.0, theta = 0.0, c = 0.0, sigma = 0.0;
  std::uint64_t seed = 0;
};

struct RatioRow {
  std::string instance;
  std::uint64_t seed = 0;
  double resolution = 0.0;
  std::string a, b;
  double ratio = 0.0;
  bool degenerate = false;  // 0/0 or x/0
};

struct RatioReport {
  std::vector<RatioRow> rows;
  /// (instance, seed, a, b) -> max/min - 1 of the ratio over resolutions; NaN if any row is degenerate.
  std::map<std::tuple<std::string, std::uint64_t, std::string, std::string>, double> stability;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  RatioReport ratios;
  std::vector<FunctionalReport> reports;  // aligned with the total rows
};

/// The functional reports for one instance and function (names as in the config).
std::vector<FunctionalReport> compute_functionals(const Instance& inst, const ExperimentConfig& cfg,
                                                  const std::vector<double>& on_space);

ExperimentResult run_equivalence(const ExperimentConfig& cfg);

struct DirichletProbe {
  double trace = 0.0;
  double lp = 0.0;      // ||F||_{L_p(mu)}
  double energy = 0.0;  // sum lip F^p mu
  double ratio = 0.0;
};

/// lip F(x) = max over points y with d(x, y) <= mesh of |F(x) - F(y)| / d(x, y),
/// mesh = resolution * (1 + slack). Uses the simple or difficult norm by theta_1.
DirichletProbe dirichlet_upper_bound_probe(const Space& space, const std::vector<double>& F, double p,
                                           const PiecewiseSet& s, int l = 1);

// ---------------------------------------------------------------- reports

inline constexpr const char* kCsvHeader = "instance,resolution,functional,value,part,param_p,param_theta,param_c,param_sigma,seed";

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& text);
nlohmann::json rows_to_json(const std::vector<ResultRow>& rows);
std::string ratios_to_csv(const RatioReport& r);
std::string stability_to_csv(const RatioReport& r);

/// format csv or json; IoError when the path cannot be written.
void report_emit(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace mmtrace
