#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "polydd/dd_space.hpp"
#include "polydd/errors.hpp"

namespace polydd {

InterfaceIndex classify_interface(const DofMap& dm, const BoxPartition& part) {
  if (dm.n_sub != part.n * part.n)
    throw structural_error("classify_interface: dof map built for another partition");
  InterfaceIndex idx;
  idx.n_sub = dm.n_sub;
  idx.n_hat = dm.n_interface;
  idx.hat0 = dm.hat_begin();

  idx.nat_of_hat.resize(idx.n_hat);
  idx.subs_of_hat.resize(idx.n_hat);
  idx.primal_rank.assign(idx.n_hat, -1);
  idx.dual_rank.assign(idx.n_hat, -1);

  std::unordered_map<long long, int> edge_of_pair;
  for (int e = 0; e < static_cast<int>(part.macro_edges.size()); ++e) {
    const MacroEdge& me = part.macro_edges[e];
    const long long key = static_cast<long long>(std::min(me.sub0, me.sub1)) *
                              (1LL << 32) +
                          std::max(me.sub0, me.sub1);
    edge_of_pair[key] = e;
  }
  idx.edge_nodes.assign(part.macro_edges.size(), {});

  for (int i = 0; i < idx.n_hat; ++i) {
    const int nat = dm.nat_of_global[idx.hat0 + i];
    idx.nat_of_hat[i] = nat;
    idx.subs_of_hat[i] = dm.dof_subs[nat];
    const int ni = static_cast<int>(idx.subs_of_hat[i].size());
    if (ni == 2) {
      const long long key = static_cast<long long>(idx.subs_of_hat[i][0]) * (1LL << 32) +
                            idx.subs_of_hat[i][1];
      auto it = edge_of_pair.find(key);
      if (it == edge_of_pair.end())
        throw structural_error(
            "classify_interface: interface node between non-adjacent subdomains");
      idx.dual_rank[i] = static_cast<int>(idx.hat_of_dual.size());
      idx.hat_of_dual.push_back(i);
      idx.edge_nodes[it->second].push_back(i);
    } else if (ni == 4) {
      const Point2 p = dm.position[nat];
      bool at_corner = false;
      for (const Point2& cp : part.cross_points)
        at_corner |= dist(p, cp) <= 1e-12;
      if (!at_corner)
        throw structural_error("classify_interface: 4-subdomain node off the corners");
      idx.primal_rank[i] = static_cast<int>(idx.hat_of_primal.size());
      idx.hat_of_primal.push_back(i);
    } else {
      throw structural_error("classify_interface: node shared by " +
                             std::to_string(ni) + " subdomains");
    }
  }
  idx.n_primal = static_cast<int>(idx.hat_of_primal.size());
  idx.n_dual = static_cast<int>(idx.hat_of_dual.size());
  idx.n_tilde = 2 * idx.n_dual + idx.n_primal;

  // broken layout and the tilde slots (dual copies subdomain-major, then primal)
  idx.sub_nodes.assign(idx.n_sub, {});
  for (int s = 0; s < idx.n_sub; ++s) {
    idx.sub_nodes[s].reserve(dm.sub_boundary[s].size());
    for (int nat : dm.sub_boundary[s])
      idx.sub_nodes[s].push_back(dm.global_of_nat[nat] - idx.hat0);
  }
  idx.broken_offset.assign(idx.n_sub + 1, 0);
  idx.dual_offset.assign(idx.n_sub + 1, 0);
  for (int s = 0; s < idx.n_sub; ++s) {
    int nd = 0;
    for (int i : idx.sub_nodes[s]) nd += idx.dual_rank[i] >= 0 ? 1 : 0;
    idx.broken_offset[s + 1] =
        idx.broken_offset[s] + static_cast<int>(idx.sub_nodes[s].size());
    idx.dual_offset[s + 1] = idx.dual_offset[s] + nd;
  }
  idx.n_broken = idx.broken_offset[idx.n_sub];

  idx.tilde_slot.assign(idx.n_sub, {});
  for (int s = 0; s < idx.n_sub; ++s) {
    int d = idx.dual_offset[s];
    for (int i : idx.sub_nodes[s])
      idx.tilde_slot[s].push_back(idx.dual_rank[i] >= 0
                                      ? d++
                                      : 2 * idx.n_dual + idx.primal_rank[i]);
  }

  idx.dual_pairs.resize(idx.n_dual);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p) {
      const int i = idx.sub_nodes[s][p];
      if (idx.dual_rank[i] < 0) continue;
      InterfaceIndex::DualPair& pr = idx.dual_pairs[idx.dual_rank[i]];
      if (pr.sub0 < 0) {  // subdomains visited in ascending order
        pr.sub0 = s;
        pr.tilde0 = idx.tilde_slot[s][p];
        pr.broken0 = idx.broken_offset[s] + p;
      } else {
        pr.sub1 = s;
        pr.tilde1 = idx.tilde_slot[s][p];
        pr.broken1 = idx.broken_offset[s] + p;
      }
    }
  for (const auto& pr : idx.dual_pairs)
    if (pr.sub1 < 0)
      throw structural_error("classify_interface: dual node with a single copy");
  return idx;
}

ScalingD build_scaling(const InterfaceIndex& idx, const std::vector<double>& rho,
                       double gamma) {
  if (gamma < 0.5) throw parameter_error("build_scaling: gamma >= 1/2 required");
  if (static_cast<int>(rho.size()) != idx.n_sub)
    throw parameter_error("build_scaling: one rho per subdomain required");
  for (double r : rho)
    if (r <= 0.0) throw parameter_error("build_scaling: rho must be positive");
  ScalingD sc;
  sc.gamma = gamma;
  sc.d.assign(idx.n_broken, 0.0);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p) {
      const int i = idx.sub_nodes[s][p];
      double denom = 0.0;
      for (int j : idx.subs_of_hat[i]) denom += std::pow(rho[j], gamma);
      sc.d[idx.broken_offset[s] + p] = std::pow(rho[s], gamma) / denom;
    }
  return sc;
}

Eigen::VectorXd spread_hat(const InterfaceIndex& idx, const Eigen::VectorXd& uhat) {
  Eigen::VectorXd w(idx.n_broken);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p)
      w[idx.broken_offset[s] + p] = uhat[idx.sub_nodes[s][p]];
  return w;
}

Eigen::VectorXd gather_hat(const InterfaceIndex& idx, const Eigen::VectorXd& broken) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(idx.n_hat);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p)
      u[idx.sub_nodes[s][p]] += broken[idx.broken_offset[s] + p];
  return u;
}

Eigen::VectorXd spread_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& utilde) {
  Eigen::VectorXd w(idx.n_broken);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p)
      w[idx.broken_offset[s] + p] = utilde[idx.tilde_slot[s][p]];
  return w;
}

Eigen::VectorXd gather_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& broken) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(idx.n_tilde);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p)
      u[idx.tilde_slot[s][p]] += broken[idx.broken_offset[s] + p];
  return u;
}

Eigen::VectorXd inject_hat_tilde(const InterfaceIndex& idx, const Eigen::VectorXd& uhat) {
  Eigen::VectorXd u(idx.n_tilde);
  for (int s = 0; s < idx.n_sub; ++s)
    for (int p = 0; p < static_cast<int>(idx.sub_nodes[s].size()); ++p)
      u[idx.tilde_slot[s][p]] = uhat[idx.sub_nodes[s][p]];
  return u;
}

Eigen::VectorXd restrict_tilde_hat(const InterfaceIndex& idx,
                                   const Eigen::VectorXd& utilde) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(idx.n_hat);
  for (int d = 0; d < idx.n_dual; ++d) {
    const auto& pr = idx.dual_pairs[d];
    u[idx.hat_of_dual[d]] = utilde[pr.tilde0] + utilde[pr.tilde1];
  }
  for (int p = 0; p < idx.n_primal; ++p)
    u[idx.hat_of_primal[p]] = utilde[2 * idx.n_dual + p];
  return u;
}

Eigen::VectorXd apply_ED(const InterfaceIndex& idx, const ScalingD& sc,
                         const Eigen::VectorXd& utilde) {
  Eigen::VectorXd w = spread_tilde(idx, utilde);
  w.array() *= Eigen::Map<const Eigen::ArrayXd>(sc.d.data(), sc.d.size());
  return gather_hat(idx, w);
}

Eigen::VectorXd apply_EDt(const InterfaceIndex& idx, const ScalingD& sc,
                          const Eigen::VectorXd& uhat) {
  Eigen::VectorXd w = spread_hat(idx, uhat);
  w.array() *= Eigen::Map<const Eigen::ArrayXd>(sc.d.data(), sc.d.size());
  return gather_tilde(idx, w);
}

Eigen::VectorXd apply_B(const InterfaceIndex& idx, const Eigen::VectorXd& utilde) {
  Eigen::VectorXd lambda(idx.n_dual);
  for (int d = 0; d < idx.n_dual; ++d) {
    const auto& pr = idx.dual_pairs[d];
    lambda[d] = utilde[pr.tilde0] - utilde[pr.tilde1];
  }
  return lambda;
}

Eigen::VectorXd apply_Bt(const InterfaceIndex& idx, const Eigen::VectorXd& lambda) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(idx.n_tilde);
  for (int d = 0; d < idx.n_dual; ++d) {
    const auto& pr = idx.dual_pairs[d];
    u[pr.tilde0] += lambda[d];
    u[pr.tilde1] -= lambda[d];
  }
  return u;
}

Eigen::VectorXd apply_BD(const InterfaceIndex& idx, const ScalingD& sc,
                         const Eigen::VectorXd& wtilde) {
  Eigen::VectorXd lambda(idx.n_dual);
  for (int d = 0; d < idx.n_dual; ++d) {
    const auto& pr = idx.dual_pairs[d];
    lambda[d] = sc.d[pr.broken1] * wtilde[pr.tilde0] - sc.d[pr.broken0] * wtilde[pr.tilde1];
  }
  return lambda;
}

Eigen::VectorXd apply_BDt(const InterfaceIndex& idx, const ScalingD& sc,
                          const Eigen::VectorXd& lambda) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(idx.n_tilde);
  for (int d = 0; d < idx.n_dual; ++d) {
    const auto& pr = idx.dual_pairs[d];
    u[pr.tilde0] += sc.d[pr.broken1] * lambda[d];
    u[pr.tilde1] -= sc.d[pr.broken0] * lambda[d];
  }
  return u;
}

struct SubdomainSchur::Block {
  int ni = 0, nb = 0, nd = 0, nc = 0;
  SpMat a_ii, a_ib, a_bb;
  SpMat a_oo, a_oc;
  Eigen::MatrixXd a_cc;
  std::vector<int> o_of_b;  // boundary position -> o index, -1 for cross
  std::vector<int> c_of_b;  // boundary position -> local cross index, -1 for dual
  std::vector<int> prank;   // local cross index -> global primal rank
  Eigen::SimplicialLDLT<SpMat> f_ii;
  Eigen::SimplicialLDLT<SpMat> f_oo;
};

SubdomainSchur::~SubdomainSchur() = default;

SubdomainSchur::SubdomainSchur(const GlobalSystem& sys, const DofMap& dm,
                               const InterfaceIndex& idx)
    : dm_(&dm), idx_(&idx), sys_(&sys) {
  if (static_cast<int>(sys.A_sub.size()) != dm.n_sub)
    throw structural_error("SubdomainSchur: system blocks missing");
  blocks_.reserve(dm.n_sub);
  for (int s = 0; s < dm.n_sub; ++s) {
    auto blk = std::make_unique<Block>();
    Block& b = *blk;
    b.ni = static_cast<int>(dm.sub_interior[s].size());
    b.nb = static_cast<int>(dm.sub_boundary[s].size());
    b.o_of_b.assign(b.nb, -1);
    b.c_of_b.assign(b.nb, -1);
    for (int p = 0; p < b.nb; ++p) {
      const int i = idx.sub_nodes[s][p];
      if (idx.primal_rank[i] >= 0) {
        b.c_of_b[p] = b.nc++;
        b.prank.push_back(idx.primal_rank[i]);
      } else {
        b.o_of_b[p] = b.ni + b.nd++;
      }
    }
    const int no = b.ni + b.nd;
    std::vector<Eigen::Triplet<double>> tii, tib, tbb, too, toc;
    b.a_cc = Eigen::MatrixXd::Zero(b.nc, b.nc);
    const SpMat& a = sys.A_sub[s];
    for (int col = 0; col < a.outerSize(); ++col)
      for (SpMat::InnerIterator it(a, col); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = col;
        const double v = it.value();
        if (r < b.ni && c < b.ni) tii.emplace_back(r, c, v);
        if (r < b.ni && c >= b.ni) tib.emplace_back(r, c - b.ni, v);
        if (r >= b.ni && c >= b.ni) tbb.emplace_back(r - b.ni, c - b.ni, v);
        const int ro = r < b.ni ? r : b.o_of_b[r - b.ni];
        const int co = c < b.ni ? c : b.o_of_b[c - b.ni];
        const int rc = r < b.ni ? -1 : b.c_of_b[r - b.ni];
        const int cc = c < b.ni ? -1 : b.c_of_b[c - b.ni];
        if (ro >= 0 && co >= 0) too.emplace_back(ro, co, v);
        if (ro >= 0 && cc >= 0) toc.emplace_back(ro, cc, v);
        if (rc >= 0 && cc >= 0) b.a_cc(rc, cc) += v;
      }
    b.a_ii.resize(b.ni, b.ni);
    b.a_ii.setFromTriplets(tii.begin(), tii.end());
    b.a_ib.resize(b.ni, b.nb);
    b.a_ib.setFromTriplets(tib.begin(), tib.end());
    b.a_bb.resize(b.nb, b.nb);
    b.a_bb.setFromTriplets(tbb.begin(), tbb.end());
    b.a_oo.resize(no, no);
    b.a_oo.setFromTriplets(too.begin(), too.end());
    b.a_oc.resize(no, b.nc);
    b.a_oc.setFromTriplets(toc.begin(), toc.end());
    if (b.ni > 0) {
      b.f_ii.compute(b.a_ii);
      if (b.f_ii.info() != Eigen::Success)
        throw numerical_error("SubdomainSchur: interior factorization failed on subdomain " +
                              std::to_string(s));
    }
    if (no > 0) {
      b.f_oo.compute(b.a_oo);
      if (b.f_oo.info() != Eigen::Success)
        throw numerical_error("SubdomainSchur: dual factorization failed on subdomain " +
                              std::to_string(s));
    }
    blocks_.push_back(std::move(blk));
  }
}

Eigen::VectorXd SubdomainSchur::apply_broken(const Eigen::VectorXd& w) const {
  const InterfaceIndex& idx = *idx_;
  Eigen::VectorXd out(idx.n_broken);
  for (int s = 0; s < idx.n_sub; ++s) {
    const Block& b = *blocks_[s];
    const Eigen::VectorXd wb = w.segment(idx.broken_offset[s], b.nb);
    Eigen::VectorXd v = b.a_bb * wb;
    if (b.ni > 0) v -= b.a_ib.transpose() * b.f_ii.solve(b.a_ib * wb);
    out.segment(idx.broken_offset[s], b.nb) = v;
  }
  return out;
}

Eigen::VectorXd SubdomainSchur::apply_hat(const Eigen::VectorXd& uhat) const {
  return gather_hat(*idx_, apply_broken(spread_hat(*idx_, uhat)));
}

Eigen::VectorXd SubdomainSchur::apply_tilde(const Eigen::VectorXd& utilde) const {
  return gather_tilde(*idx_, apply_broken(spread_tilde(*idx_, utilde)));
}

Eigen::VectorXd SubdomainSchur::sdd_inv(const Eigen::VectorXd& r_dual) const {
  const InterfaceIndex& idx = *idx_;
  Eigen::VectorXd out(2 * idx.n_dual);
  for (int s = 0; s < idx.n_sub; ++s) {
    const Block& b = *blocks_[s];
    const int no = b.ni + b.nd;
    if (no == 0) continue;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(no);
    rhs.tail(b.nd) = r_dual.segment(idx.dual_offset[s], b.nd);
    const Eigen::VectorXd x = b.f_oo.solve(rhs);
    out.segment(idx.dual_offset[s], b.nd) = x.tail(b.nd);
  }
  return out;
}

Eigen::MatrixXd SubdomainSchur::coarse_matrix() const {
  const InterfaceIndex& idx = *idx_;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(idx.n_primal, idx.n_primal);
  for (int s = 0; s < idx.n_sub; ++s) {
    const Block& b = *blocks_[s];
    if (b.nc == 0) continue;
    Eigen::MatrixXd scc = b.a_cc;
    if (b.ni + b.nd > 0) {
      const Eigen::MatrixXd aoc = Eigen::MatrixXd(b.a_oc);
      scc -= aoc.transpose() * b.f_oo.solve(aoc);
    }
    for (int i = 0; i < b.nc; ++i)
      for (int j = 0; j < b.nc; ++j) f(b.prank[i], b.prank[j]) += scc(i, j);
  }
  return f;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> SubdomainSchur::condense_rhs() const {
  const InterfaceIndex& idx = *idx_;
  Eigen::VectorXd fhat = Eigen::VectorXd::Zero(idx.n_hat);
  Eigen::VectorXd ftilde = Eigen::VectorXd::Zero(idx.n_tilde);
  for (int s = 0; s < idx.n_sub; ++s) {
    const Block& b = *blocks_[s];
    const Eigen::VectorXd& fs = sys_->f_sub[s];
    Eigen::VectorXd z = fs.tail(b.nb);
    if (b.ni > 0) z -= b.a_ib.transpose() * b.f_ii.solve(fs.head(b.ni));
    for (int p = 0; p < b.nb; ++p) {
      fhat[idx.sub_nodes[s][p]] += z[p];
      ftilde[idx.tilde_slot[s][p]] += z[p];
    }
  }
  return {std::move(fhat), std::move(ftilde)};
}

Eigen::VectorXd SubdomainSchur::recover_interior(const Eigen::VectorXd& uhat,
                                                 bool interface_rhs_only) const {
  const InterfaceIndex& idx = *idx_;
  const DofMap& dm = *dm_;
  Eigen::VectorXd u = sys_->dirichlet_values;
  for (int i = 0; i < idx.n_hat; ++i) u[idx.nat_of_hat[i]] = uhat[i];
  for (int s = 0; s < idx.n_sub; ++s) {
    const Block& b = *blocks_[s];
    if (b.ni == 0) continue;
    Eigen::VectorXd wb(b.nb);
    for (int p = 0; p < b.nb; ++p) wb[p] = uhat[idx.sub_nodes[s][p]];
    Eigen::VectorXd rhs = -(b.a_ib * wb);
    if (!interface_rhs_only) rhs += sys_->f_sub[s].head(b.ni);
    const Eigen::VectorXd ui = b.f_ii.solve(rhs);
    for (int i = 0; i < b.ni; ++i) u[dm.sub_interior[s][i]] = ui[i];
  }
  return u;
}

StildeInverse::StildeInverse(const SubdomainSchur& schur, const InterfaceIndex& idx)
    : n_dual2_(2 * idx.n_dual), n_primal_(idx.n_primal) {
  fpp_ = schur.coarse_matrix();
  if (n_primal_ > 0) {
    llt_.compute(fpp_);
    if (llt_.info() != Eigen::Success)
      throw numerical_error("StildeInverse: coarse factorization breakdown");
  }
}

Eigen::VectorXd StildeInverse::apply(const SubdomainSchur& schur,
                                     const Eigen::VectorXd& r) const {
  if (static_cast<int>(r.size()) != n_dual2_ + n_primal_)
    throw structural_error("StildeInverse: size mismatch");
  const Eigen::VectorXd w1 = schur.sdd_inv(r.head(n_dual2_));
  Eigen::VectorXd out(n_dual2_ + n_primal_);
  if (n_primal_ == 0) {
    out = w1;
    return out;
  }
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n_dual2_ + n_primal_);
  t.head(n_dual2_) = w1;
  Eigen::VectorXd g = r.tail(n_primal_) - schur.apply_tilde(t).tail(n_primal_);
  const Eigen::VectorXd up = llt_.solve(g);
  t.setZero();
  t.tail(n_primal_) = up;
  out.head(n_dual2_) = w1 - schur.sdd_inv(schur.apply_tilde(t).head(n_dual2_));
  out.tail(n_primal_) = up;
  return out;
}

}  // namespace polydd
