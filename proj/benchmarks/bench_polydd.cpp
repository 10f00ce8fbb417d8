#include <benchmark/benchmark.h>

#include "polydd/geometry.hpp"
#include "polydd/solvers.hpp"
#include "polydd/vem.hpp"

namespace {

using namespace polydd;

void BM_HexMesh(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto [mesh, part] = build_hex_mesh(4, n, n);
    benchmark::DoNotOptimize(mesh.n_cells());
  }
}
BENCHMARK(BM_HexMesh)->Arg(8)->Arg(16);

void BM_VoronoiMesh(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto [mesh, part] = build_voronoi_mesh(2, cells, 42, 2);
    benchmark::DoNotOptimize(mesh.n_cells());
  }
}
BENCHMARK(BM_VoronoiMesh)->Arg(25)->Arg(100);

void BM_Assemble(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  auto [mesh, part] = build_hex_mesh(2, 8, 10);
  const DofMap dm = build_dof_map(mesh, part, k);
  const std::vector<double> rho(dm.n_sub, 1.0);
  auto f = [](Point2 p) { return p.x + p.y; };
  for (auto _ : state) {
    GlobalSystem sys = assemble(mesh, part, dm, rho, f);
    benchmark::DoNotOptimize(sys.A.nonZeros());
  }
}
BENCHMARK(BM_Assemble)->Arg(1)->Arg(2)->Arg(4);

void BM_SchurApply(benchmark::State& state) {
  auto [mesh, part] = build_hex_mesh(4, 8, 10);
  const DofMap dm = build_dof_map(mesh, part, 1);
  const std::vector<double> rho(dm.n_sub, 1.0);
  auto f = [](Point2) { return 1.0; };
  const GlobalSystem sys = assemble(mesh, part, dm, rho, f);
  DdProblem pb(part, dm, sys, rho);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(pb.idx.n_hat, 0.0, 1.0);
  for (auto _ : state) {
    Eigen::VectorXd v = pb.schur.apply_hat(w);
    benchmark::DoNotOptimize(v.sum());
  }
}
BENCHMARK(BM_SchurApply);

void BM_FetiDpSolve(benchmark::State& state) {
  auto [mesh, part] = build_hex_mesh(4, 8, 10);
  const DofMap dm = build_dof_map(mesh, part, 1);
  const std::vector<double> rho(dm.n_sub, 1.0);
  auto f = [](Point2) { return 1.0; };
  const GlobalSystem sys = assemble(mesh, part, dm, rho, f);
  for (auto _ : state) {
    DdProblem pb(part, dm, sys, rho);
    DdSolution sol = solve_fetidp(pb, 1e-6, 200);
    benchmark::DoNotOptimize(sol.report.iterations);
  }
}
BENCHMARK(BM_FetiDpSolve);

}  // namespace

BENCHMARK_MAIN();
