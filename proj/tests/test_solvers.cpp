#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "polydd/errors.hpp"
#include "polydd/solvers.hpp"
#include "polydd/vem.hpp"

namespace {

using namespace polydd;

LinOp diag_op(Eigen::VectorXd d) {
  return [d = std::move(d)](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return d.asDiagonal() * x;
  };
}

TEST(Pcg, SmallDiagonalExact) {
  Eigen::VectorXd d(3);
  d << 1.0, 2.0, 3.0;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  auto [x, rep] = pcg(diag_op(d), LinOp{}, b, 1e-12, 50);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(x[i], 1.0 / d[i], 1e-12);
  EXPECT_NEAR(rep.lambda_min, 1.0, 1e-8);
  EXPECT_NEAR(rep.lambda_max, 3.0, 1e-8);
  EXPECT_NEAR(rep.cond, 3.0, 1e-7);
}

TEST(Pcg, PerfectPreconditionerOneIteration) {
  Eigen::VectorXd d(5);
  d << 1.0, 4.0, 9.0, 16.0, 25.0;
  Eigen::VectorXd dinv = d.cwiseInverse();
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  auto [x, rep] = pcg(diag_op(d), diag_op(dinv), b, 1e-10, 50);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_NEAR(rep.cond, 1.0, 1e-10);
}

TEST(Pcg, DenseSpdAgainstDirectSolve) {
  const int n = 50;
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = u(gen);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev[i] = std::pow(100.0, i / (n - 1.0));  // 1..100
  const Eigen::MatrixXd A = Q * ev.asDiagonal() * Q.transpose();
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = u(gen);

  LinOp a = [&A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; };
  auto [x, rep] = pcg(a, LinOp{}, b, 1e-12, 400);
  EXPECT_TRUE(rep.converged);
  const Eigen::VectorXd xd = A.ldlt().solve(b);
  EXPECT_LT((x - xd).norm(), 1e-8 * xd.norm());
  EXPECT_NEAR(rep.lambda_min, 1.0, 0.1);
  EXPECT_NEAR(rep.lambda_max, 100.0, 10.0);
  EXPECT_NEAR(rep.cond, 100.0, 15.0);
  // residual history is monotone enough to end below tolerance
  EXPECT_LE(rep.rel_residuals.back(), 1e-12);
  EXPECT_DOUBLE_EQ(rep.rel_residuals.front(), 1.0);
}

TEST(Pcg, ZeroRhsShortCircuits) {
  auto [x, rep] = pcg(diag_op(Eigen::VectorXd::Ones(4)), LinOp{},
                      Eigen::VectorXd::Zero(4), 1e-10, 10);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_EQ(x.norm(), 0.0);
  EXPECT_DOUBLE_EQ(rep.lambda_min, 1.0);
  EXPECT_DOUBLE_EQ(rep.lambda_max, 1.0);
}

TEST(Pcg, FlagsAtMaxit) {
  Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(40, 1.0, 1e6);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(40);
  auto [x, rep] = pcg(diag_op(d), LinOp{}, b, 1e-14, 3);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 3);
  EXPECT_EQ(static_cast<int>(rep.rel_residuals.size()), 4);
}

TEST(Pcg, ThrowsOnIndefiniteOperator) {
  Eigen::VectorXd d(3);
  d << 1.0, -1.0, 2.0;
  EXPECT_THROW(pcg(diag_op(d), LinOp{}, Eigen::VectorXd::Ones(3), 1e-10, 10),
               numerical_error);
  Eigen::VectorXd mneg = Eigen::VectorXd::Constant(3, -1.0);
  EXPECT_THROW(pcg(diag_op(Eigen::VectorXd::Ones(3)), diag_op(mneg),
                   Eigen::VectorXd::Ones(3), 1e-10, 10),
               numerical_error);
  EXPECT_THROW(pcg(diag_op(Eigen::VectorXd::Ones(3)), LinOp{},
                   Eigen::VectorXd::Ones(3), 1e-10, -1),
               parameter_error);
}

struct Problem {
  PolyMesh mesh;
  BoxPartition part;
  DofMap dm;
  std::vector<double> rho;
  GlobalSystem sys;

  Problem(std::pair<PolyMesh, BoxPartition> mp, int k, std::vector<double> rho_in = {})
      : mesh(std::move(mp.first)),
        part(std::move(mp.second)),
        dm(build_dof_map(mesh, part, k)),
        rho(rho_in.empty() ? std::vector<double>(dm.n_sub, 1.0) : std::move(rho_in)),
        sys(assemble(mesh, part, dm, rho, [](Point2 p) {
          return std::sin(3.0 * p.x) + p.y;
        })) {}
};

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / b.norm();
}

TEST(DdSolvers, AgreeWithMonolithicSolve) {
  struct Case {
    std::pair<PolyMesh, BoxPartition> mp;
    int k;
    std::vector<double> rho;
  };
  std::vector<Case> cases;
  cases.push_back({build_hex_mesh(2, 4, 4), 1, {}});
  cases.push_back({build_hex_mesh(2, 4, 4), 2, {}});
  cases.push_back({build_hex_mesh(3, 2, 2), 1, {1.0, 100.0, 0.01, 1.0, 1e3, 1.0, 0.1, 1.0, 10.0}});
  cases.push_back({build_voronoi_mesh(2, 12, 3, 1), 1, {}});

  for (auto& cs : cases) {
    Problem p(std::move(cs.mp), cs.k, cs.rho);
    const Eigen::VectorXd uref = solve_reference(p.sys, p.dm);
    DdProblem pb(p.part, p.dm, p.sys, p.rho);

    const DdSolution bddc = solve_bddc(pb, 1e-10, 200);
    EXPECT_TRUE(bddc.report.converged);
    EXPECT_LT(rel_diff(bddc.u, uref), 1e-7);

    const DdSolution feti = solve_fetidp(pb, 1e-10, 200);
    EXPECT_TRUE(feti.report.converged);
    EXPECT_LT(rel_diff(feti.u, uref), 1e-7);

    const DdSolution cg = solve_schur_unpreconditioned(pb, 1e-10, 500);
    EXPECT_TRUE(cg.report.converged);
    EXPECT_LT(rel_diff(cg.u, uref), 1e-7);

    EXPECT_LT(rel_diff(bddc.u, feti.u), 1e-7);
  }
}

TEST(DdSolvers, SpectraMatchBetweenBddcAndFetiDp) {
  Problem p(build_hex_mesh(4, 4, 4), 1);
  DdProblem pb(p.part, p.dm, p.sys, p.rho);
  const DdSolution bddc = solve_bddc(pb, 1e-8, 200);
  const DdSolution feti = solve_fetidp(pb, 1e-8, 200);
  EXPECT_NEAR(bddc.report.cond / feti.report.cond, 1.0, 0.05);
}

TEST(DdSolvers, RandomInterfaceRhsPath) {
  Problem p(build_hex_mesh(2, 4, 4), 1);
  DdProblem pb(p.part, p.dm, p.sys, p.rho);
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd fhat(pb.idx.n_hat);
  for (int i = 0; i < fhat.size(); ++i) fhat[i] = u(gen);
  pb.set_interface_rhs(fhat);

  const DdSolution bddc = solve_bddc(pb, 1e-12, 200);
  const DdSolution feti = solve_fetidp(pb, 1e-12, 200);
  EXPECT_TRUE(bddc.report.converged);
  EXPECT_TRUE(feti.report.converged);
  EXPECT_LT(rel_diff(bddc.u, feti.u), 1e-8);

  EXPECT_THROW(pb.set_interface_rhs(Eigen::VectorXd::Zero(pb.idx.n_hat + 1)),
               parameter_error);
}

TEST(DdSolvers, NonConvergenceIsFlaggedNotThrown) {
  Problem p(build_hex_mesh(4, 2, 2), 1);
  DdProblem pb(p.part, p.dm, p.sys, p.rho);
  const DdSolution cg = solve_schur_unpreconditioned(pb, 1e-14, 2);
  EXPECT_FALSE(cg.report.converged);
  const DdSolution feti = solve_fetidp(pb, 1e-14, 2);
  EXPECT_FALSE(feti.report.converged);
  const DdSolution bddc = solve_bddc(pb, 1e-14, 2);
  EXPECT_FALSE(bddc.report.converged);
}

TEST(DdSolvers, GammaVariantsStayConsistent) {
  Problem p(build_hex_mesh(2, 4, 4), 1, {1.0, 1e3, 1e-3, 1.0});
  const Eigen::VectorXd uref = solve_reference(p.sys, p.dm);
  for (double gamma : {0.5, 1.0}) {
    DdProblem pb(p.part, p.dm, p.sys, p.rho, gamma);
    const DdSolution bddc = solve_bddc(pb, 1e-10, 200);
    EXPECT_TRUE(bddc.report.converged) << "gamma=" << gamma;
    EXPECT_LT(rel_diff(bddc.u, uref), 1e-7) << "gamma=" << gamma;
  }
}

}  // namespace
