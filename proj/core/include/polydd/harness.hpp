#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polydd/geometry.hpp"

namespace polydd {

/// Per-subdomain constant diffusion coefficient.
///   Constant       - rho everywhere;
///   CentralJump    - 1 outside, rho inside the centered block of
///                    (N/2) x (N/2) subdomains (N must be even);
///   RandomExponent - rho = 10^a with integer a drawn uniformly from
///                    [-4, 4] per subdomain (mt19937_64, 53-bit uniform,
///                    floor(9u) - 4).
struct CoefficientField {
  enum class Kind { Constant, CentralJump, RandomExponent };
  Kind kind = Kind::Constant;
  double rho = 1.0;
  std::uint64_t seed = 0;

  std::vector<double> values(const BoxPartition& part) const;
  std::string label() const;
};

struct ExperimentConfig {
  enum class MeshKind { Hex, Voronoi };
  enum class Method { FetiDp, Bddc, Cg };
  enum class Rhs { SinSin, Random };

  MeshKind mesh = MeshKind::Hex;
  int N = 4;
  int nx = 8, ny = 10;  // hex pattern per subdomain
  int cells = 100;      // voronoi cells per subdomain
  int lloyd = 3;
  int degree = 1;
  CoefficientField coeff;
  Method method = Method::FetiDp;
  Rhs rhs = Rhs::SinSin;
  double tol = 1e-6;
  int maxit = 1000;
  double gamma = 1.0;
  std::uint64_t seed = 0;  // mesh stream; rhs stream is seed + 2

  std::string mesh_label() const;  // "hex" or "voronoi"
  std::string size_label() const;  // "8x10" or "100"
  std::string method_label() const;
};

struct ResultRow {
  ExperimentConfig config;
  int iterations = 0;
  bool converged = true;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double cond = 1.0;
  double wall_ms = 0.0;
  int dofs_total = 0;
  int dofs_interface = 0;
  int dofs_tilde = 0;
  int dofs_primal = 0;
  int dofs_dual_nodes = 0;
  double h_max = 0.0;
  double subdomain_diameter = 0.0;
  std::string note;  // empty, "maxit" on flagged non-convergence, or an error
};

/// Build mesh -> dofs -> coefficients -> operators -> solve, deterministic
/// for fixed seeds. Module errors surface with the offending config echoed.
ResultRow run_experiment(const ExperimentConfig& cfg);

// CSV layout shared by the driver and the tests. The trailing meta column
// carries the timestamp and the RNG identifier; everything else is a pure
// function of the config, so masking wall_ms and meta makes runs comparable
// byte for byte.
std::string csv_header();
std::string csv_row(const ResultRow& row, const std::string& meta);
std::string csv_deterministic_view(const std::string& csv);

struct TableArtifact {
  std::string csv;
  std::string markdown;  // N-by-size grid of "iters (cond)" entries
  bool any_flagged = false;
};

/// Runs every config in grid order; per-cell failures are recorded in the
/// row note, cells over the memory budget are skipped and rendered as "—".
TableArtifact run_table(const std::vector<ExperimentConfig>& grid,
                        long long dof_budget = 3'000'000);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  std::string csv;  // log(k^2 H / h), sqrt(lambda_max)
};

/// Least-squares line through (log(k^2 H / h), sqrt(lambda_max)).
ScalingFit emit_scaling_data(const std::vector<ResultRow>& rows);

struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> l2;
  std::vector<double> h1;
  double l2_slope = 0.0;
  double h1_slope = 0.0;
  std::string csv;
};

/// Manufactured sin(pi x) sin(pi y) solution on a refined hex sequence,
/// solved monolithically; slopes fitted against log h.
ConvergenceStudy convergence_study(int degree, int levels);

}  // namespace polydd
