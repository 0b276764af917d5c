// mmtrace: generate instances, verify regularity, evaluate trace functionals,
// run equivalence experiments and re-emit their reports.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mmtrace/experiments.hpp"
#include "mmtrace/io.hpp"

namespace fs = std::filesystem;
using namespace mmtrace;

namespace {

std::string pieces_path(const std::string& space_path, const std::string& given) {
  if (!given.empty()) return given;
  return (fs::path(space_path).parent_path() / "pieces.json").string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::IoError, "cannot create directory '" + dir + "'");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_generate(const std::string& spec_path, const std::string& out_dir) {
  const auto cfg = experiment_from_config(read_key_values(spec_path));
  const auto inst = generate(cfg.generator);
  ensure_dir(out_dir);
  write_space(inst.space, (fs::path(out_dir) / "space.mmspace").string());
  write_pieces(inst.s, (fs::path(out_dir) / "pieces.json").string());
  nlohmann::json adr = nlohmann::json::array();
  for (std::size_t i = 0; i < inst.adr.size(); ++i) {
    auto j = to_json(inst.adr[i]);
    j["piece"] = inst.s.piece(i).name;
    adr.push_back(j);
  }
  write_text((fs::path(out_dir) / "adr.json").string(), adr.dump(1) + "\n");
  for (const auto& fn : cfg.functions) {
    auto label = fn.label();
    std::replace(label.begin(), label.end(), ':', '_');
    const auto F = sample_on_space(inst.space, fn, cfg.seeds.front());
    write_function(inst.s, restrict_to_s(inst.s, F), (fs::path(out_dir) / ("f_" + label + ".txt")).string());
  }
  std::cout << "wrote " << inst.space.size() << " points, " << inst.s.N() << " pieces to " << out_dir << "\n";
  return 0;
}

struct VerifyArgs {
  std::string space, pieces, what;
  double sigma = 0.25;
  std::optional<double> theta;
  std::optional<int> k_max;
  std::vector<double> c_grid{1.0, 2.0, 4.0};
};

int cmd_verify(const VerifyArgs& a) {
  const Space space = read_space(a.space);
  const PiecewiseSet s = read_pieces(space, pieces_path(a.space, a.pieces));
  const auto grid = default_r_grid(space);
  nlohmann::json out;
  if (a.what == "adr") {
    out = nlohmann::json::array();
    for (const auto& p : s.pieces()) {
      auto j = to_json(check_adr(space, p, grid));
      j["piece"] = p.name;
      out.push_back(j);
    }
  } else if (a.what == "lcr") {
    out = nlohmann::json::array();
    for (const auto& p : s.pieces()) {
      auto j = to_json(check_lcr(space, p.ids, p.theta, grid));
      j["piece"] = p.name;
      out.push_back(j);
    }
  } else if (a.what == "porosity") {
    out = to_json(porosity_scan(space, s.union_ids(), a.sigma, grid));
    nlohmann::json est = nlohmann::json::object();
    for (const auto& p : s.pieces()) est[p.name] = porosity_sigma_estimate(space, p.ids, grid);
    out["sigma_estimate"] = est;
  } else if (a.what == "measure-seq") {
    const int K = resolve_k_max(space, ScaleOptions{a.k_max});
    const auto seq = build_measure_sequence(s, a.theta.value_or(s.theta_S()), K);
    const auto sets = default_test_sets(s);
    out = to_json(verify_regular_sequence(seq, a.c_grid, sets));
  } else {
    fail(ErrorKind::ParameterError, "--what must be adr, lcr, porosity or measure-seq");
  }
  std::cout << out.dump(1) << "\n";
  return 0;
}

struct NormsArgs {
  std::string space, pieces, f, which;
  double p = 2.5, c = 6.0, sigma = 0.01;
  std::optional<double> theta;
  std::string l = "1";
  std::size_t budget = 200000;
  std::optional<int> k_max;
};

int cmd_norms(const NormsArgs& a) {
  const Space space = read_space(a.space);
  Instance inst{space, read_pieces(space, pieces_path(a.space, a.pieces)), {}};
  const auto f = read_function(inst.s, a.f);
  ExperimentConfig cfg;
  cfg.p = a.p;
  cfg.c = a.c;
  cfg.sigma = a.sigma;
  cfg.theta = a.theta;
  cfg.budget = a.budget;
  cfg.k_max = a.k_max;
  cfg.functionals = split(a.which);
  cfg.resolutions = {space.resolution()};
  cfg.l.clear();
  for (const auto& t : split(a.l)) cfg.l.push_back(std::stoi(t));
  for (const auto& p : inst.s.pieces()) cfg.generator.pieces.push_back({p.name, "region", p.theta, {}, {}, {}, 0.0});
  require(std::find(cfg.functionals.begin(), cfg.functionals.end(), "dirichlet") == cfg.functionals.end(),
          ErrorKind::ParameterError, "dirichlet needs an extension to the whole space; use experiment");
  validate_config(cfg);
  // f lives on S; compute_functionals expects values on the space.
  std::vector<double> on_space(space.size(), 0.0);
  for (std::size_t u = 0; u < f.size(); ++u) on_space[inst.s.union_ids()[u]] = f[u];
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : compute_functionals(inst, cfg, on_space)) out.push_back(to_json(r));
  std::cout << out.dump(1) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config, const std::string& out_dir) {
  const auto cfg = experiment_from_config(read_key_values(config));
  validate_config(cfg);
  ensure_dir(out_dir);
  const auto res = run_equivalence(cfg);
  report_emit(res.rows, "csv", (fs::path(out_dir) / "results.csv").string());
  report_emit(res.rows, "json", (fs::path(out_dir) / "results.json").string());
  write_text((fs::path(out_dir) / "ratios.csv").string(), ratios_to_csv(res.ratios));
  write_text((fs::path(out_dir) / "stability.csv").string(), stability_to_csv(res.ratios));
  std::cout << res.rows.size() << " rows, " << res.ratios.rows.size() << " ratios written to " << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format, const std::string& out) {
  const auto rows = rows_from_csv(read_text((fs::path(in_dir) / "results.csv").string()));
  if (!out.empty()) {
    report_emit(rows, format, out);
    return 0;
  }
  if (format == "csv")
    std::cout << rows_to_csv(rows);
  else if (format == "json")
    std::cout << rows_to_json(rows).dump(1) << "\n";
  else
    fail(ErrorKind::ParameterError, "format must be csv or json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace functionals on piecewise regular subsets of metric measure spaces"};
  app.require_subcommand(1);

  std::string spec, out, config, in, format = "csv";
  auto* gen = app.add_subcommand("generate", "Build a grid instance from a spec file");
  gen->add_option("--spec", spec, "key = value spec file")->required();
  gen->add_option("--out", out, "output directory")->required();

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Regularity checks on a stored instance");
  ver->add_option("--space", va.space, "mmspace file")->required();
  ver->add_option("--pieces", va.pieces, "pieces JSON (default: pieces.json beside the space)");
  ver->add_option("--what", va.what, "adr | lcr | porosity | measure-seq")->required();
  ver->add_option("--sigma", va.sigma, "porosity constant");
  ver->add_option("--theta", va.theta, "measure-sequence theta (default theta_N)");
  ver->add_option("--k-max", va.k_max, "finest scale");
  ver->add_option("--c-grid", va.c_grid, "dilations for the doubling scan")->delimiter(',');

  NormsArgs na;
  auto* nor = app.add_subcommand("norms", "Evaluate functionals of a function on S");
  nor->add_option("--space", na.space, "mmspace file")->required();
  nor->add_option("--pieces", na.pieces, "pieces JSON (default: pieces.json beside the space)");
  nor->add_option("--f", na.f, "function file")->required();
  nor->add_option("--which", na.which, "comma list of functionals")->required();
  nor->add_option("--p", na.p, "exponent p");
  nor->add_option("--theta", na.theta, "measure-sequence theta");
  nor->add_option("--c", na.c, "nice-family constant");
  nor->add_option("--sigma", na.sigma, "porosity constant");
  nor->add_option("--l", na.l, "gluing indices, comma list");
  nor->add_option("--budget", na.budget, "family search budget");
  nor->add_option("--k-max", na.k_max, "finest scale");

  auto* exp = app.add_subcommand("experiment", "Run an equivalence experiment");
  exp->add_option("--config", config, "key = value config file")->required();
  exp->add_option("--out", out, "output directory")->required();

  std::string report_out;
  auto* rep = app.add_subcommand("report", "Re-emit experiment results");
  rep->add_option("--in", in, "experiment output directory")->required();
  rep->add_option("--format", format, "csv | json");
  rep->add_option("--out", report_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(spec, out);
    if (*ver) return cmd_verify(va);
    if (*nor) return cmd_norms(na);
    if (*exp) return cmd_experiment(config, out);
    if (*rep) return cmd_report(in, format, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
