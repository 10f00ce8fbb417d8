#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "polydd/geometry.hpp"

namespace polydd {

using SpMat = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(Point2)>;
using VectorField = std::function<Point2(Point2)>;

/// Degrees of freedom of the order-k virtual element space:
///   - one value per mesh vertex,
///   - k-1 values per edge at the interior nodes of the (k+1)-point
///     Gauss-Lobatto rule mapped onto the edge (ordered from v0 to v1),
///   - moments |K|^-1 ∫_K m_α v against the scaled monomials m_α with
///     |α| ≤ k-2 on every cell.
///
/// Natural ids enumerate vertices, then edge dofs, then cell moments.
/// The assembled (global) numbering permutes these so that dofs interior
/// to each subdomain come first, grouped per subdomain, then the interface
/// dofs, then the Dirichlet dofs of the outer boundary. Free dofs are the
/// global range [0, n_free); interface dofs are [n_free - n_interface, n_free).
struct DofMap {
  int k = 1;
  int n_sub = 0;
  int n_total = 0;
  int n_free = 0;
  int n_interface = 0;

  std::vector<int> global_of_nat;
  std::vector<int> nat_of_global;
  std::vector<char> dirichlet;                 // nat-indexed
  std::vector<Point2> position;                // nat-indexed; moments at centroid
  std::vector<std::vector<int>> dof_subs;      // nat-indexed, sorted subdomain sets
  std::vector<std::vector<int>> cell_dofs;     // per cell: vertices, side nodes, moments
  std::vector<std::vector<int>> sub_interior;  // per subdomain: nat ids, ascending global
  std::vector<std::vector<int>> sub_boundary;  // per subdomain: interface nat ids, ascending global

  int hat_begin() const { return n_free - n_interface; }
  int moments_per_cell() const { return poly_space_dim(k - 2); }
};

/// Numbers the dofs and classifies them against the partition. Subdomain
/// membership of a dof is the set of subdomains of its incident cells.
DofMap build_dof_map(const PolyMesh& mesh, const BoxPartition& part, int k);

/// Elementwise VEM operators. `projector` maps a local dof vector to the
/// coefficients of its energy projection in the scaled monomial basis;
/// `dof_of_poly` holds the dof vectors of the monomials (columns), so
/// `dof_of_poly * projector` is the projector expressed dof-to-dof.
struct LocalElement {
  int cell = -1;
  double rho = 1.0;
  Eigen::MatrixXd projector;      // dim P_k  x  n_dof
  Eigen::MatrixXd dof_of_poly;    // n_dof    x  dim P_k
  Eigen::MatrixXd consistency;
  Eigen::MatrixXd stabilization;  // rho (I-Π)ᵀ(I-Π), dof scalar product
  Eigen::MatrixXd kloc;           // consistency + stabilization
};

Eigen::MatrixXd local_projector(const PolyMesh& mesh, int cell, int k);
LocalElement local_stiffness(const PolyMesh& mesh, int cell, int k, double rho);
Eigen::VectorXd local_load(const PolyMesh& mesh, int cell, int k, const ScalarField& f);

/// Local dof order on a cell: loop vertices, then per side the k-1 edge
/// nodes in traversal order, then the moment dofs.
int local_dof_count(const PolyMesh& mesh, int cell, int k);

/// Dof vector of a smooth function on one cell, in local dof order. Moment
/// dofs are integrated by a centroid-fan quadrature of degree quad_degree
/// (defaults to 2k+2).
Eigen::VectorXd local_dof_vector(const PolyMesh& mesh, int cell, int k,
                                 const ScalarField& u, int quad_degree = -1);

struct QuadPoint {
  Point2 p;
  double w;
};

/// Centroid-fan quadrature over a (possibly non-convex) simple polygon;
/// triangle jacobians are signed, so the rule integrates exactly on any
/// simple cell.
std::vector<QuadPoint> cell_quadrature(const PolyMesh& mesh, int cell, int degree);

/// Assembled problem with homogeneous (or test-hook) Dirichlet data
/// eliminated symmetrically. A and F live on the free global numbering;
/// A_sub/f_sub are the per-subdomain Neumann blocks in the local ordering
/// [sub_interior; sub_boundary] used by the substructuring solvers.
struct GlobalSystem {
  SpMat A;
  Eigen::VectorXd F;
  Eigen::VectorXd dirichlet_values;  // nat-indexed, zero on free dofs
  std::vector<SpMat> A_sub;
  std::vector<Eigen::VectorXd> f_sub;
};

/// rho_sub: one constant coefficient per subdomain. `dirichlet` is a
/// test-only hook for inhomogeneous boundary data; production runs pass
/// nullptr (homogeneous).
GlobalSystem assemble(const PolyMesh& mesh, const BoxPartition& part,
                      const DofMap& dm, const std::vector<double>& rho_sub,
                      const ScalarField& f, const ScalarField* dirichlet = nullptr);

/// Monolithic sparse Cholesky solve; returns the full nat-indexed dof
/// vector including boundary values. Oracle for the iterative solvers.
Eigen::VectorXd solve_reference(const GlobalSystem& sys, const DofMap& dm);

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// Cellwise errors of the computable projection Π∇u_h against an exact
/// solution, by fan quadrature of degree 2k+2.
ErrorNorms error_norms(const PolyMesh& mesh, const DofMap& dm,
                       const Eigen::VectorXd& u_nat, const ScalarField& u_exact,
                       const VectorField& grad_exact);

/// Coordinate-format dump (symmetric, lower triangle) for debugging.
void write_matrix_market(const SpMat& a, const std::string& path);

}  // namespace polydd
