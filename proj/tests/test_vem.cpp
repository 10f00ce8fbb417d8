#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "polydd/errors.hpp"
#include "polydd/geometry.hpp"
#include "polydd/harness.hpp"
#include "polydd/quadrature.hpp"
#include "polydd/vem.hpp"

namespace {

using namespace polydd;

PolyMesh one_cell(std::vector<Point2> poly) {
  std::vector<int> loop(poly.size());
  for (size_t i = 0; i < poly.size(); ++i) loop[i] = static_cast<int>(i);
  return PolyMesh(std::move(poly), {loop}, {0});
}

PolyMesh unit_square() { return one_cell({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

// scaled monomial on a cell and its gradient
double mono_at(const PolyMesh& mesh, int c, int ax, int ay, Point2 p) {
  const Point2 xc = mesh.cell_centroid(c);
  const double h = mesh.cell_diameter(c);
  return std::pow((p.x - xc.x) / h, ax) * std::pow((p.y - xc.y) / h, ay);
}

Point2 mono_grad(const PolyMesh& mesh, int c, int ax, int ay, Point2 p) {
  const Point2 xc = mesh.cell_centroid(c);
  const double h = mesh.cell_diameter(c);
  const double gx =
      ax == 0 ? 0.0
              : ax / h * std::pow((p.x - xc.x) / h, ax - 1) *
                    std::pow((p.y - xc.y) / h, ay);
  const double gy =
      ay == 0 ? 0.0
              : ay / h * std::pow((p.x - xc.x) / h, ax) *
                    std::pow((p.y - xc.y) / h, ay - 1);
  return {gx, gy};
}

std::vector<std::pair<int, int>> basis_upto(int k) {
  std::vector<std::pair<int, int>> b;
  for (int d = 0; d <= k; ++d)
    for (int ay = 0; ay <= d; ++ay) b.push_back({d - ay, ay});
  return b;
}

TEST(Projector, ReproducesPolynomials) {
  auto [hex, hpart] = build_hex_mesh(2, 2, 2);
  auto [vor, vpart] = build_voronoi_mesh(2, 6, 11, 1);
  const PolyMesh sq = unit_square();
  struct Probe {
    const PolyMesh* mesh;
    int cell;
  };
  const Probe probes[] = {{&hex, 0}, {&hex, hex.n_cells() / 2}, {&vor, 1}, {&sq, 0}};
  for (int k = 1; k <= 4; ++k) {
    for (const Probe& pr : probes) {
      const Eigen::MatrixXd proj = local_projector(*pr.mesh, pr.cell, k);
      const auto basis = basis_upto(k);
      ASSERT_EQ(proj.rows(), static_cast<int>(basis.size()));
      for (size_t a = 0; a < basis.size(); ++a) {
        auto u = [&](Point2 p) {
          return mono_at(*pr.mesh, pr.cell, basis[a].first, basis[a].second, p);
        };
        const Eigen::VectorXd dofs = local_dof_vector(*pr.mesh, pr.cell, k, u);
        const Eigen::VectorXd coeff = proj * dofs;
        for (size_t b = 0; b < basis.size(); ++b)
          EXPECT_NEAR(coeff[b], a == b ? 1.0 : 0.0, 1e-11)
              << "k=" << k << " monomial " << a << " coeff " << b;
      }
    }
  }
}

TEST(Stiffness, ConsistencyIdentityAgainstQuadrature) {
  // vᵀ K dofs(p) must equal rho ∫ ∇(Π∇v)·∇p for polynomial p, with the
  // integral evaluated by an independent fan quadrature
  auto [vor, vpart] = build_voronoi_mesh(2, 6, 19, 1);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  const double rho = 3.25;
  for (int k = 1; k <= 3; ++k) {
    const int cell = 2;
    const LocalElement el = local_stiffness(vor, cell, k, rho);
    const Eigen::MatrixXd proj = el.projector;
    const auto basis = basis_upto(k);
    for (size_t a = 0; a < basis.size(); ++a) {
      auto p = [&](Point2 q) {
        return mono_at(vor, cell, basis[a].first, basis[a].second, q);
      };
      const Eigen::VectorXd dp = local_dof_vector(vor, cell, k, p);
      Eigen::VectorXd v(dp.size());
      for (int i = 0; i < v.size(); ++i) v[i] = u01(gen);
      const double lhs = v.dot(el.kloc * dp);
      const Eigen::VectorXd pv = proj * v;
      double rhs = 0;
      for (const QuadPoint& qp : cell_quadrature(vor, cell, 2 * k)) {
        Point2 gv{0, 0};
        for (size_t b = 0; b < basis.size(); ++b) {
          const Point2 g = mono_grad(vor, cell, basis[b].first, basis[b].second, qp.p);
          gv.x += pv[b] * g.x;
          gv.y += pv[b] * g.y;
        }
        const Point2 gp = mono_grad(vor, cell, basis[a].first, basis[a].second, qp.p);
        rhs += qp.w * (gv.x * gp.x + gv.y * gp.y);
      }
      rhs *= rho;
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)))
          << "k=" << k << " p index " << a;
    }
  }
}

TEST(Stiffness, KernelAndRowSums) {
  auto [hex, part] = build_hex_mesh(2, 4, 4);
  for (int k = 1; k <= 4; ++k) {
    const LocalElement el = local_stiffness(hex, 3, k, 1.0);
    // constants are in the kernel for every k
    auto one = [](Point2) { return 1.0; };
    const Eigen::VectorXd d1 = local_dof_vector(hex, 3, k, one);
    EXPECT_LT((el.kloc * d1).norm(), 1e-11 * el.kloc.norm()) << "k=" << k;
    // the all-ones vector is the constant's dof vector only for k <= 2
    if (k <= 2) {
      const Eigen::VectorXd rs = el.kloc.rowwise().sum();
      EXPECT_LT(rs.norm(), 1e-11 * el.kloc.norm()) << "k=" << k;
    }
    // symmetry and positive semidefiniteness
    EXPECT_LT((el.kloc - el.kloc.transpose()).norm(), 1e-13 * el.kloc.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(el.kloc);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * el.kloc.norm());
  }
}

TEST(Stiffness, RhoLinearity) {
  const PolyMesh sq = unit_square();
  const LocalElement a = local_stiffness(sq, 0, 2, 1.0);
  const LocalElement b = local_stiffness(sq, 0, 2, 2.0);
  EXPECT_LT((b.kloc - 2.0 * a.kloc).norm(), 1e-13 * a.kloc.norm());
}

// minimum-energy P1 extension on the centroid fan, boundary subdivided at
// the edge dof nodes; an independent conforming energy to bracket the VEM one
class FanSurrogate {
 public:
  FanSurrogate(const PolyMesh& mesh, int cell, int k) : mesh_(mesh), cell_(cell), k_(k) {
    const auto& loop = mesh.cells()[cell];
    const auto& verts = mesh.vertices();
    const int nv = static_cast<int>(loop.size());
    const Rule1D gl = gauss_lobatto(k + 1);
    for (int s = 0; s < nv; ++s) {
      const Point2 a = verts[loop[s]], b = verts[loop[(s + 1) % nv]];
      pts_.push_back(a);
      dof_of_pt_.push_back(s);
      for (int q = 1; q < k; ++q) {
        const double t = gl.nodes[q];
        pts_.push_back(a + 0.5 * (t + 1.0) * (b - a));
        dof_of_pt_.push_back(nv + s * (k - 1) + (q - 1));
      }
    }
    cen_ = mesh.cell_centroid(cell);
  }

  // energy of the fan interpolant and the centroid value minimizing it
  std::pair<double, double> min_energy(const Eigen::VectorXd& dofs) const {
    auto energy = [&](double t) {
      double e = 0;
      const int n = static_cast<int>(pts_.size());
      for (int i = 0; i < n; ++i) {
        const Point2 A = cen_, B = pts_[i], C = pts_[(i + 1) % n];
        const double a = t, b = dofs[dof_of_pt_[i]], c = dofs[dof_of_pt_[(i + 1) % n]];
        const double det = cross(B - A, C - A);
        const double gx = ((b - a) * (C.y - A.y) - (c - a) * (B.y - A.y)) / det;
        const double gy = ((c - a) * (B.x - A.x) - (b - a) * (C.x - A.x)) / det;
        e += 0.5 * std::abs(det) * (gx * gx + gy * gy);
      }
      return e;
    };
    const double e0 = energy(0.0), ep = energy(1.0), em = energy(-1.0);
    const double alpha = 0.5 * (ep + em) - e0;
    const double beta = 0.5 * (ep - em);
    const double tstar = alpha > 0 ? -beta / (2.0 * alpha) : 0.0;
    return {energy(tstar), tstar};
  }

  // VEM dofs of the same interpolant: boundary values plus fan-exact moments
  Eigen::VectorXd vem_dofs(const Eigen::VectorXd& boundary_vals, double cen_val) const {
    const int nmom = poly_space_dim(k_ - 2);
    const int nb = static_cast<int>(pts_.size());
    Eigen::VectorXd dofs = Eigen::VectorXd::Zero(nb + nmom);
    dofs.head(nb) = boundary_vals;
    if (nmom == 0) return dofs;
    const TriangleRule tr = triangle_rule(2 * k_);
    const double area = mesh_.cell_area(cell_);
    for (int i = 0; i < nb; ++i) {
      const Point2 A = cen_, B = pts_[i], C = pts_[(i + 1) % nb];
      const double a = cen_val, b = boundary_vals[dof_of_pt_[i]],
                   c = boundary_vals[dof_of_pt_[(i + 1) % nb]];
      const double det = cross(B - A, C - A);
      for (size_t q = 0; q < tr.w.size(); ++q) {
        const Point2 p = A + tr.x[q] * (B - A) + tr.y[q] * (C - A);
        const double w = a + tr.x[q] * (b - a) + tr.y[q] * (c - a);
        int m = 0;
        for (int d = 0; d <= k_ - 2; ++d)
          for (int ay = 0; ay <= d; ++ay, ++m)
            dofs[nb + m] += 2.0 * det * tr.w[q] * w *
                            mono_at(mesh_, cell_, d - ay, ay, p) / area;
      }
    }
    return dofs;
  }

  int n_boundary() const { return static_cast<int>(pts_.size()); }
  const std::vector<int>& dof_of_pt() const { return dof_of_pt_; }

 private:
  const PolyMesh& mesh_;
  int cell_;
  int k_;
  std::vector<Point2> pts_;
  std::vector<int> dof_of_pt_;
  Point2 cen_;
};

TEST(Stiffness, StabilityBracketAgainstConformingSurrogate) {
  auto [hex, hpart] = build_hex_mesh(2, 2, 2);
  auto [vor, vpart] = build_voronoi_mesh(2, 6, 23, 1);
  const PolyMesh sq = unit_square();
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  struct Probe {
    const PolyMesh* mesh;
    int cell;
  };
  const Probe probes[] = {{&hex, 1}, {&vor, 0}, {&sq, 0}};
  for (int k = 1; k <= 3; ++k) {
    for (const Probe& pr : probes) {
      const LocalElement el = local_stiffness(*pr.mesh, pr.cell, k, 1.0);
      const FanSurrogate sur(*pr.mesh, pr.cell, k);
      for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd bv(sur.n_boundary());  // indexed by local dof id
        for (int i = 0; i < bv.size(); ++i) bv[i] = u01(gen);
        const auto [eref, tstar] = sur.min_energy(bv);
        ASSERT_GT(eref, 0.0);
        const Eigen::VectorXd vem = sur.vem_dofs(bv, tstar);
        const double evem = vem.dot(el.kloc * vem);
        const double ratio = evem / eref;
        EXPECT_GT(ratio, 1e-3) << "k=" << k << " trial " << trial;
        EXPECT_LT(ratio, 1e3) << "k=" << k << " trial " << trial;
      }
    }
  }
}

TEST(Load, ExamplesAndPolynomialExactness) {
  const PolyMesh sq = unit_square();
  auto zero = [](Point2) { return 0.0; };
  auto onef = [](Point2) { return 1.0; };
  EXPECT_EQ(local_load(sq, 0, 2, zero).norm(), 0.0);

  const Eigen::VectorXd l1 = local_load(sq, 0, 1, onef);
  ASSERT_EQ(l1.size(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(l1[i], 0.25, 1e-15);

  // f = 1, k >= 2: area on the zeroth moment dof, nothing elsewhere
  for (int k = 2; k <= 4; ++k) {
    const Eigen::VectorXd lk = local_load(sq, 0, k, onef);
    const int nv = 4;
    for (int i = 0; i < lk.size(); ++i) {
      const double want = i == nv * k ? 1.0 : 0.0;
      EXPECT_NEAR(lk[i], want, 1e-12) << "k=" << k << " i=" << i;
    }
  }

  // f in P_{k-2}: load pairs exactly with the moment dofs
  auto fx = [&sq](Point2 p) { return p.x; };
  const Eigen::VectorXd l3 = local_load(sq, 0, 3, fx);
  const Point2 xc = sq.cell_centroid(0);
  const double h = sq.cell_diameter(0);
  EXPECT_NEAR(l3[12], xc.x, 1e-12);      // coefficient of m00
  EXPECT_NEAR(l3[13], h, 1e-12);         // coefficient of m10
  EXPECT_NEAR(l3[14], 0.0, 1e-12);       // coefficient of m01
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(l3[i], 0.0, 1e-12);
}

TEST(DofMapping, NumberingInvariants) {
  auto [mesh, part] = build_hex_mesh(2, 2, 2);
  for (int k : {1, 2, 3}) {
    const DofMap dm = build_dof_map(mesh, part, k);
    const int moments = poly_space_dim(k - 2);
    EXPECT_EQ(dm.n_total, mesh.n_vertices() + (k - 1) * mesh.n_edges() +
                              moments * mesh.n_cells());
    EXPECT_EQ(dm.moments_per_cell(), moments);

    // permutation property
    std::vector<char> seen(dm.n_total, 0);
    for (int nat = 0; nat < dm.n_total; ++nat) {
      const int g = dm.global_of_nat[nat];
      ASSERT_GE(g, 0);
      ASSERT_LT(g, dm.n_total);
      ASSERT_FALSE(seen[g]);
      seen[g] = 1;
      EXPECT_EQ(dm.nat_of_global[g], nat);
    }

    // class layout: interiors per subdomain, then interface, then Dirichlet
    for (int nat = 0; nat < dm.n_total; ++nat) {
      const int g = dm.global_of_nat[nat];
      const bool dir = dm.dirichlet[nat] != 0;
      const bool itf = dm.dof_subs[nat].size() >= 2 && !dir;
      if (dir)
        EXPECT_GE(g, dm.n_free);
      else if (itf) {
        EXPECT_GE(g, dm.hat_begin());
        EXPECT_LT(g, dm.n_free);
      } else {
        EXPECT_LT(g, dm.hat_begin());
      }
    }

    // per-subdomain interior blocks are contiguous and ascending
    int expect = 0;
    for (int s = 0; s < dm.n_sub; ++s)
      for (int nat : dm.sub_interior[s]) EXPECT_EQ(dm.global_of_nat[nat], expect++);
    EXPECT_EQ(expect, dm.hat_begin());

    // boundary lists are interface dofs of that subdomain, ascending
    for (int s = 0; s < dm.n_sub; ++s) {
      int prev = -1;
      for (int nat : dm.sub_boundary[s]) {
        EXPECT_GE(dm.global_of_nat[nat], dm.hat_begin());
        EXPECT_GT(dm.global_of_nat[nat], prev);
        prev = dm.global_of_nat[nat];
      }
    }
  }
  EXPECT_THROW(build_dof_map(mesh, part, 0), parameter_error);
}

TEST(Assemble, SymmetricSpdAndNeumannRowSums) {
  auto [mesh, part] = build_hex_mesh(2, 2, 2);
  const DofMap dm = build_dof_map(mesh, part, 2);
  const std::vector<double> rho(dm.n_sub, 1.0);
  auto f = [](Point2 p) { return p.x; };
  const GlobalSystem sys = assemble(mesh, part, dm, rho, f);

  SpMat at = SpMat(sys.A.transpose());
  EXPECT_LT((sys.A - at).norm(), 1e-12 * sys.A.norm());

  Eigen::SimplicialLDLT<SpMat> ldlt(sys.A);
  ASSERT_EQ(ldlt.info(), Eigen::Success);
  EXPECT_GT(ldlt.vectorD().minCoeff(), 0.0);

  // subdomain blocks drop Dirichlet rows, so only a floating subdomain keeps
  // constants in its kernel; the center block of a 3x3 partition is one (k=2)
  {
    auto [m3, p3] = build_hex_mesh(3, 2, 2);
    const DofMap dm3 = build_dof_map(m3, p3, 2);
    const std::vector<double> rho3(dm3.n_sub, 1.0);
    const GlobalSystem s3 = assemble(m3, p3, dm3, rho3, f);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s3.A_sub[4].rows());
    EXPECT_LT((s3.A_sub[4] * ones).norm(), 1e-10 * s3.A_sub[4].norm());
    const Eigen::VectorXd edge_ones = Eigen::VectorXd::Ones(s3.A_sub[1].rows());
    EXPECT_GT((s3.A_sub[1] * edge_ones).norm(), 1e-6 * s3.A_sub[1].norm());
  }

  // doubling rho doubles the matrix
  const std::vector<double> rho2(dm.n_sub, 2.0);
  const GlobalSystem sys2 = assemble(mesh, part, dm, rho2, f);
  EXPECT_LT((sys2.A - 2.0 * sys.A).norm(), 1e-12 * sys.A.norm());
}

TEST(Assemble, PatchTestLinearSolution) {
  auto [mesh, part] = build_hex_mesh(2, 2, 2);
  auto g = [](Point2 p) { return p.x - 2.0 * p.y; };
  auto zero = [](Point2) { return 0.0; };
  for (int k : {1, 2, 3}) {
    const DofMap dm = build_dof_map(mesh, part, k);
    const std::vector<double> rho(dm.n_sub, 1.0);
    const ScalarField gd = g;
    const GlobalSystem sys = assemble(mesh, part, dm, rho, zero, &gd);
    const Eigen::VectorXd u = solve_reference(sys, dm);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Eigen::VectorXd want = local_dof_vector(mesh, c, k, g);
      const auto& dofs = dm.cell_dofs[c];
      for (size_t i = 0; i < dofs.size(); ++i)
        ASSERT_NEAR(u[dofs[i]], want[i], 1e-10) << "k=" << k << " cell " << c;
    }
  }
}

TEST(SolveReference, SingleCellZeroLoad) {
  const PolyMesh sq = unit_square();
  const BoxPartition part = BoxPartition::regular(1);
  auto zero = [](Point2) { return 0.0; };
  for (int k : {1, 2}) {
    const DofMap dm = build_dof_map(sq, part, k);
    const std::vector<double> rho(1, 1.0);
    const GlobalSystem sys = assemble(sq, part, dm, rho, zero);
    const Eigen::VectorXd u = solve_reference(sys, dm);
    EXPECT_EQ(u.size(), dm.n_total);
    EXPECT_NEAR(u.norm(), 0.0, 1e-14);
  }
}

TEST(ErrorNorms, ConstantAndReproduction) {
  auto [mesh, part] = build_hex_mesh(2, 2, 2);
  const DofMap dm = build_dof_map(mesh, part, 2);

  // u_h = 0 against u = 1 on the unit domain
  auto onef = [](Point2) { return 1.0; };
  auto zerog = [](Point2) { return Point2{0.0, 0.0}; };
  const ErrorNorms e0 =
      error_norms(mesh, dm, Eigen::VectorXd::Zero(dm.n_total), onef, zerog);
  EXPECT_NEAR(e0.l2, 1.0, 1e-12);
  EXPECT_NEAR(e0.h1_semi, 0.0, 1e-12);

  // exact quadratic data reproduces to roundoff
  auto q = [](Point2 p) { return p.x * p.x - 0.5 * p.x * p.y + p.y; };
  auto gq = [](Point2 p) { return Point2{2.0 * p.x - 0.5 * p.y, -0.5 * p.x + 1.0}; };
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dm.n_total);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Eigen::VectorXd loc = local_dof_vector(mesh, c, 2, q);
    const auto& dofs = dm.cell_dofs[c];
    for (size_t i = 0; i < dofs.size(); ++i) u[dofs[i]] = loc[i];
  }
  const ErrorNorms er = error_norms(mesh, dm, u, q, gq);
  EXPECT_LT(er.l2, 1e-10);
  EXPECT_LT(er.h1_semi, 1e-10);
}

TEST(Convergence, ManufacturedSolutionRates) {
  for (int k : {1, 2, 3}) {
    const ConvergenceStudy st = convergence_study(k, 3);
    EXPECT_NEAR(st.h1_slope, k, 0.15) << "k=" << k;
    EXPECT_NEAR(st.l2_slope, k + 1.0, 0.15) << "k=" << k;
    for (size_t i = 1; i < st.h.size(); ++i) {
      EXPECT_LT(st.l2[i], st.l2[i - 1]);
      EXPECT_LT(st.h1[i], st.h1[i - 1]);
    }
  }
}

}  // namespace
