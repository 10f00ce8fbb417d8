// Command-line front end: single runs, table sweeps, and h-convergence studies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polydd/errors.hpp"
#include "polydd/harness.hpp"

namespace {

using polydd::CoefficientField;
using polydd::ExperimentConfig;

ExperimentConfig config_from_flags(const std::string& mesh, int N, int nx, int ny,
                                   int cells, int lloyd, int degree,
                                   const std::string& coeff, double rho0,
                                   long long seed, double gamma,
                                   const std::string& method, const std::string& rhs,
                                   double tol, int maxit) {
  ExperimentConfig cfg;
  if (mesh == "hex")
    cfg.mesh = ExperimentConfig::MeshKind::Hex;
  else if (mesh == "voronoi")
    cfg.mesh = ExperimentConfig::MeshKind::Voronoi;
  else
    throw polydd::parameter_error("unknown mesh kind: " + mesh);
  cfg.N = N;
  cfg.nx = nx;
  cfg.ny = ny;
  cfg.cells = cells;
  cfg.lloyd = lloyd;
  cfg.degree = degree;
  cfg.seed = seed;
  cfg.gamma = gamma;
  cfg.tol = tol;
  cfg.maxit = maxit;

  if (coeff == "const") {
    cfg.coeff.kind = CoefficientField::Kind::Constant;
    cfg.coeff.rho = rho0;
  } else if (coeff == "central") {
    cfg.coeff.kind = CoefficientField::Kind::CentralJump;
    cfg.coeff.rho = rho0;
  } else if (coeff == "randexp") {
    cfg.coeff.kind = CoefficientField::Kind::RandomExponent;
    cfg.coeff.seed = seed + 1;  // coefficient substream, distinct from mesh seed
  } else {
    throw polydd::parameter_error("unknown coefficient field: " + coeff);
  }

  if (method == "fetidp")
    cfg.method = ExperimentConfig::Method::FetiDp;
  else if (method == "bddc")
    cfg.method = ExperimentConfig::Method::Bddc;
  else if (method == "cg")
    cfg.method = ExperimentConfig::Method::Cg;
  else
    throw polydd::parameter_error("unknown method: " + method);

  if (rhs == "sinsin")
    cfg.rhs = ExperimentConfig::Rhs::SinSin;
  else if (rhs == "random")
    cfg.rhs = ExperimentConfig::Rhs::Random;
  else
    throw polydd::parameter_error("unknown rhs: " + rhs);
  return cfg;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  auto str = [&j](const char* key, const std::string& dflt) {
    return j.contains(key) ? j.at(key).get<std::string>() : dflt;
  };
  auto num = [&j](const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
  };
  return config_from_flags(
      str("mesh", "hex"), static_cast<int>(num("N", 4)),
      static_cast<int>(num("nx", 8)), static_cast<int>(num("ny", 10)),
      static_cast<int>(num("cells", 100)), static_cast<int>(num("lloyd", 3)),
      static_cast<int>(num("degree", 1)), str("coeff", "const"), num("rho0", 1.0),
      static_cast<long long>(num("seed", 0)), num("gamma", 1.0),
      str("method", "fetidp"), str("rhs", "sinsin"), num("tol", 1e-6),
      static_cast<int>(num("maxit", 1000)));
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw polydd::parameter_error("cannot open output file: " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polydd: virtual element solver with dual-primal substructuring"};
  app.require_subcommand(1);

  std::string mesh = "hex", coeff = "const", method = "fetidp", rhs = "sinsin";
  int N = 4, nx = 8, ny = 10, cells = 100, lloyd = 3, degree = 1, maxit = 1000;
  long long seed = 0;
  double rho0 = 1.0, gamma = 1.0, tol = 1e-6;
  std::string out_path, md_path, spec_path;
  int levels = 4;

  CLI::App* run = app.add_subcommand("run", "solve one configuration, append a CSV row");
  run->add_option("--mesh", mesh, "hex|voronoi")->capture_default_str();
  run->add_option("--N", N, "subdomains per side")->capture_default_str();
  run->add_option("--nx", nx, "hex cells across per subdomain")->capture_default_str();
  run->add_option("--ny", ny, "hex rows per subdomain")->capture_default_str();
  run->add_option("--cells", cells, "voronoi cells per subdomain")->capture_default_str();
  run->add_option("--lloyd", lloyd, "voronoi relaxation sweeps")->capture_default_str();
  run->add_option("--degree", degree, "polynomial degree k")->capture_default_str();
  run->add_option("--coeff", coeff, "const|central|randexp")->capture_default_str();
  run->add_option("--rho0", rho0, "coefficient value for const/central")
      ->capture_default_str();
  run->add_option("--seed", seed, "master seed (mesh; coeff uses seed+1, rhs seed+2)")
      ->capture_default_str();
  run->add_option("--gamma", gamma, "scaling exponent")->capture_default_str();
  run->add_option("--method", method, "fetidp|bddc|cg")->capture_default_str();
  run->add_option("--rhs", rhs, "sinsin|random")->capture_default_str();
  run->add_option("--tol", tol, "relative tolerance")->capture_default_str();
  run->add_option("--maxit", maxit, "iteration cap")->capture_default_str();
  run->add_option("--out", out_path, "CSV output path (default: stdout)");

  CLI::App* table = app.add_subcommand("table", "run a grid of configurations");
  table
      ->add_option("--spec", spec_path,
                   "JSON file {\"configs\":[{...}]} where each entry may set "
                   "mesh,N,nx,ny,cells,lloyd,degree,coeff,rho0,seed,gamma,"
                   "method,rhs,tol,maxit")
      ->required();
  table->add_option("--out", out_path, "CSV output path (default: stdout)");
  table->add_option("--md", md_path, "also write a markdown iteration table");

  CLI::App* conv = app.add_subcommand("converge", "h-refinement study on a fixed mesh family");
  conv->add_option("--degree", degree, "polynomial degree k")->capture_default_str();
  conv->add_option("--levels", levels, "number of refinement levels")
      ->capture_default_str();
  conv->add_option("--out", out_path, "CSV output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg =
          config_from_flags(mesh, N, nx, ny, cells, lloyd, degree, coeff, rho0, seed,
                            gamma, method, rhs, tol, maxit);
      const polydd::ResultRow row = polydd::run_experiment(cfg);
      write_or_print(out_path, polydd::csv_header() + polydd::csv_row(row, ""));
      if (!row.converged) {
        std::cerr << "polydd: not converged within " << cfg.maxit << " iterations\n";
        return 2;
      }
    } else if (table->parsed()) {
      std::ifstream in(spec_path);
      if (!in) throw polydd::parameter_error("cannot open spec file: " + spec_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw polydd::parameter_error(std::string("bad spec file: ") + e.what());
      }
      if (!j.contains("configs") || !j["configs"].is_array())
        throw polydd::parameter_error("spec file needs a \"configs\" array");
      std::vector<ExperimentConfig> grid;
      for (const auto& entry : j["configs"]) grid.push_back(config_from_json(entry));
      const polydd::TableArtifact art = polydd::run_table(grid);
      write_or_print(out_path, art.csv);
      if (!md_path.empty()) write_or_print(md_path, art.markdown);
      if (art.any_flagged) {
        std::cerr << "polydd: some cells did not converge\n";
        return 2;
      }
    } else if (conv->parsed()) {
      const polydd::ConvergenceStudy st = polydd::convergence_study(degree, levels);
      write_or_print(out_path, st.csv);
      std::fprintf(stderr, "l2 slope %.3f, h1 slope %.3f\n", st.l2_slope, st.h1_slope);
    }
  } catch (const std::exception& e) {
    std::cerr << "polydd: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
