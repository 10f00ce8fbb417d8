#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "polydd/dd_space.hpp"
#include "polydd/vem.hpp"

namespace polydd {

/// Conjugate-gradient run record. lambda_min/lambda_max are the extreme
/// eigenvalues of the tridiagonal Lanczos matrix built from the alpha/beta
/// recurrence coefficients, estimating the preconditioned operator's
/// spectrum; cond = lambda_max / lambda_min.
struct PcgReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> rel_residuals;  // preconditioned norms relative to start
  std::vector<double> alpha;
  std::vector<double> beta;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double cond = 1.0;
};

using LinOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// PCG with zero initial guess, stopping on the relative preconditioned
/// residual. Pass an empty preconditioner for plain CG. Non-convergence at
/// maxit is reported, not thrown; an indefinite direction is thrown.
std::pair<Eigen::VectorXd, PcgReport> pcg(const LinOp& a, const LinOp& m,
                                          const Eigen::VectorXd& b,
                                          double tol = 1e-6, int maxit = 1000);

/// Everything the interface solvers need, built once per assembled problem.
/// Holds the interface classification, the scaling weights, the per-subdomain
/// Schur factorizations, the coarse factor, and the condensed right-hand
/// sides. The referenced mesh/dof map/system must outlive this object.
struct DdProblem {
  DdProblem(const BoxPartition& part, const DofMap& dm, const GlobalSystem& sys,
            const std::vector<double>& rho_sub, double gamma = 1.0);
  DdProblem(const DdProblem&) = delete;
  DdProblem& operator=(const DdProblem&) = delete;

  /// Replaces the condensed loads by data given directly on the interface
  /// (robustness tests drive the solvers with random interface data).
  /// The consistent split puts half of each dual value on either copy.
  void set_interface_rhs(const Eigen::VectorXd& fhat_new);

  const DofMap* dm;
  InterfaceIndex idx;
  ScalingD scaling;
  SubdomainSchur schur;
  StildeInverse stilde;
  Eigen::VectorXd fhat;
  Eigen::VectorXd ftilde;
  bool interface_rhs_only = false;
};

struct DdSolution {
  Eigen::VectorXd u;  // full nat-indexed dof vector
  PcgReport report;
};

/// PCG on the assembled interface system with the weighted-average
/// preconditioner E_D S̃⁻¹ E_Dᵀ; interiors recovered afterwards.
DdSolution solve_bddc(const DdProblem& pb, double tol = 1e-6, int maxit = 1000);

/// PCG on the jump system B S̃⁻¹ Bᵀ λ = −B S̃⁻¹ f̃ with preconditioner
/// B_D S̃ B_Dᵀ; the recovered partially continuous solution must have a
/// negligible jump, then interiors are recovered from its average.
DdSolution solve_fetidp(const DdProblem& pb, double tol = 1e-6, int maxit = 1000);

/// Plain CG on the assembled interface system (robustness baseline);
/// non-convergence at maxit is returned flagged.
DdSolution solve_schur_unpreconditioned(const DdProblem& pb, double tol = 1e-6,
                                        int maxit = 1000);

}  // namespace polydd
