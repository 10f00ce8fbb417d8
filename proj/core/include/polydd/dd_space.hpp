#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "polydd/geometry.hpp"
#include "polydd/vem.hpp"

namespace polydd {

/// Interface bookkeeping for the substructuring solvers. Four vector
/// spaces appear:
///   hat    - single-valued interface values, size n_hat, ordered by
///            ascending global dof id;
///   broken - per-subdomain boundary values concatenated subdomain-major,
///            each block ordered like sub_nodes[s];
///   tilde  - partially continuous values: one copy per subdomain for the
///            dual (non-cross) nodes, subdomain-major, followed by the
///            single-valued cross-point (primal) values;
///   jump   - one value per dual node, oriented lower-index subdomain
///            minus higher.
struct InterfaceIndex {
  int n_sub = 0;
  int n_hat = 0;
  int n_primal = 0;
  int n_dual = 0;    // dual nodes; the jump space has this size
  int n_tilde = 0;   // 2*n_dual + n_primal
  int n_broken = 0;
  int hat0 = 0;      // first interface id in the global numbering

  std::vector<int> nat_of_hat;
  std::vector<std::vector<int>> subs_of_hat;  // sharing subdomains N_i, sorted
  std::vector<int> primal_rank;               // per hat node, -1 if dual
  std::vector<int> dual_rank;                 // per hat node, -1 if primal
  std::vector<int> hat_of_primal;
  std::vector<int> hat_of_dual;

  std::vector<std::vector<int>> sub_nodes;    // per subdomain: hat indices, ascending
  std::vector<int> broken_offset;             // size n_sub + 1
  std::vector<std::vector<int>> tilde_slot;   // per subdomain, per boundary position
  std::vector<int> dual_offset;               // tilde dual-block start per subdomain

  std::vector<std::vector<int>> edge_nodes;   // per macro-edge: its dual hat nodes

  struct DualPair {
    int sub0 = -1, sub1 = -1;      // sub0 < sub1; jump = copy0 - copy1
    int tilde0 = -1, tilde1 = -1;
    int broken0 = -1, broken1 = -1;
  };
  std::vector<DualPair> dual_pairs;
};

/// Splits the interface dofs into cross points (primal) and dual nodes and
/// assigns every dual node to its macro-edge. Interface nodes must be
/// shared by exactly 2 or 4 subdomains on a box partition; cross points
/// must coincide with partition corners.
InterfaceIndex classify_interface(const DofMap& dm, const BoxPartition& part);

/// rho-weighted counting weights d^{s,i} = rho_s^gamma / Σ_{j∈N_i} rho_j^gamma,
/// stored per broken slot. Partition of unity across each node's subdomains.
struct ScalingD {
  double gamma = 1.0;
  std::vector<double> d;
};

ScalingD build_scaling(const InterfaceIndex& idx, const std::vector<double>& rho,
                       double gamma);

// value-copying injections and their transposes
Eigen::VectorXd spread_hat(const InterfaceIndex& idx, const Eigen::VectorXd& uhat);
Eigen::VectorXd gather_hat(const InterfaceIndex& idx, const Eigen::VectorXd& broken);
Eigen::VectorXd spread_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& utilde);
Eigen::VectorXd gather_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& broken);
Eigen::VectorXd inject_hat_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& uhat);
Eigen::VectorXd restrict_tilde_hat(const InterfaceIndex& idx, const Eigen::VectorXd& utilde);

/// Weighted average back to single-valued interface values and its
/// transpose: E_D = R̂ᵀ D R̃ with the scaling weights of `sc`.
Eigen::VectorXd apply_ED(const InterfaceIndex& idx, const ScalingD& sc,
                         const Eigen::VectorXd& utilde);
Eigen::VectorXd apply_EDt(const InterfaceIndex& idx, const ScalingD& sc,
                          const Eigen::VectorXd& uhat);

// signed jump operator and its scaled variant (neighbor's weight on each copy)
Eigen::VectorXd apply_B(const InterfaceIndex& idx, const Eigen::VectorXd& utilde);
Eigen::VectorXd apply_Bt(const InterfaceIndex& idx, const Eigen::VectorXd& lambda);
Eigen::VectorXd apply_BD(const InterfaceIndex& idx, const ScalingD& sc,
                         const Eigen::VectorXd& wtilde);
Eigen::VectorXd apply_BDt(const InterfaceIndex& idx, const ScalingD& sc,
                          const Eigen::VectorXd& lambda);

/// Per-subdomain Schur complements, applied matrix-free. Two factorizations
/// are kept per subdomain: the interior block (for S and condensation) and
/// the interior+dual block with cross-point rows and columns removed (for
/// the dual-block inverse and the coarse problem).
class SubdomainSchur {
 public:
  SubdomainSchur(const GlobalSystem& sys, const DofMap& dm, const InterfaceIndex& idx);
  ~SubdomainSchur();
  SubdomainSchur(const SubdomainSchur&) = delete;
  SubdomainSchur& operator=(const SubdomainSchur&) = delete;

  Eigen::VectorXd apply_broken(const Eigen::VectorXd& w) const;
  Eigen::VectorXd apply_hat(const Eigen::VectorXd& uhat) const;
  Eigen::VectorXd apply_tilde(const Eigen::VectorXd& utilde) const;

  /// Inverse of the dual-dual block of the partially continuous Schur
  /// complement, block diagonal over subdomains.
  Eigen::VectorXd sdd_inv(const Eigen::VectorXd& r_dual) const;

  /// Primal Schur complement F_ΠΠ assembled from per-subdomain blocks.
  Eigen::MatrixXd coarse_matrix() const;

  /// Condensed loads (f̂, f̃) from the per-subdomain load shares.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> condense_rhs() const;

  /// Full nat-indexed solution from interface values; interior dofs by
  /// subdomain solves against the load shares (or zero loads when the
  /// right-hand side was prescribed directly on the interface).
  Eigen::VectorXd recover_interior(const Eigen::VectorXd& uhat,
                                   bool interface_rhs_only = false) const;

 private:
  const DofMap* dm_;
  const InterfaceIndex* idx_;
  const GlobalSystem* sys_;
  struct Block;
  std::vector<std::unique_ptr<Block>> blocks_;
};

/// Block-Cholesky inverse of the partially continuous Schur complement:
/// dual solves via SubdomainSchur::sdd_inv plus the dense coarse factor.
class StildeInverse {
 public:
  StildeInverse(const SubdomainSchur& schur, const InterfaceIndex& idx);

  Eigen::VectorXd apply(const SubdomainSchur& schur, const Eigen::VectorXd& r) const;
  const Eigen::MatrixXd& coarse() const { return fpp_; }

 private:
  int n_dual2_ = 0;
  int n_primal_ = 0;
  Eigen::MatrixXd fpp_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace polydd
