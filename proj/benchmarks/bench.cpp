#include <benchmark/benchmark.h>

#include <random>

#include "kgl/breather.hpp"
#include "kgl/dnls.hpp"
#include "kgl/dynamics.hpp"
#include "kgl/kg_spectrum.hpp"
#include "kgl/lattice.hpp"
#include "kgl/normal_form.hpp"

using namespace kgl;

namespace {

RealField random_field(const LatticeGrid& grid, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  RealField f(grid);
  for (int i = 0; i < grid.sites(); ++i) f.values[i] = dist(rng);
  return f;
}

}  // namespace

static void BM_Laplacian1d(benchmark::State& state) {
  LatticeGrid grid(1, int(state.range(0)), Boundary::Dirichlet);
  RealField f = random_field(grid, 7);
  Eigen::VectorXd out(grid.sites());
  for (auto _ : state) {
    laplacian_into(f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.sites());
}
BENCHMARK(BM_Laplacian1d)->Arg(100)->Arg(1000);

static void BM_Laplacian2d(benchmark::State& state) {
  LatticeGrid grid(2, int(state.range(0)), Boundary::Periodic);
  RealField f = random_field(grid, 7);
  Eigen::VectorXd out(grid.sites());
  for (auto _ : state) {
    laplacian_into(f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.sites());
}
BENCHMARK(BM_Laplacian2d)->Arg(20)->Arg(50);

static void BM_DnlsResidual(benchmark::State& state) {
  LatticeGrid grid(1, int(state.range(0)), Boundary::Dirichlet);
  DnlsParams prm(1, -9.0);
  RealField A = random_field(grid, 11);
  for (auto _ : state) {
    RealField r = dnls_residual(A, prm);
    benchmark::DoNotOptimize(r.values.data());
  }
}
BENCHMARK(BM_DnlsResidual)->Arg(40)->Arg(400);

static void BM_DnlsJacobian(benchmark::State& state) {
  LatticeGrid grid(1, 40, Boundary::Dirichlet);
  DnlsParams prm(1, -9.0);
  RealField A = random_field(grid, 11);
  for (auto _ : state) {
    Eigen::MatrixXd J = dnls_jacobian(A, prm);
    benchmark::DoNotOptimize(J.data());
  }
}
BENCHMARK(BM_DnlsJacobian);

static void BM_BreatherResidual(benchmark::State& state) {
  LatticeGrid grid(1, 15, Boundary::Dirichlet);
  SolitonBranch branch = solve_single_pulse(grid, 1, 5.0);
  BreatherSolution B = solve_breather(seed_from_soliton(branch, 0.05, int(state.range(0))));
  for (auto _ : state) {
    auto r = breather_residual(B);
    benchmark::DoNotOptimize(r.data());
  }
}
BENCHMARK(BM_BreatherResidual)->Arg(8)->Arg(16);

static void BM_VerletStep(benchmark::State& state) {
  LatticeGrid grid(1, int(state.range(0)), Boundary::Dirichlet);
  RealField u = random_field(grid, 3);
  PhaseState s;
  s.u = u;
  s.v = random_field(grid, 4);
  for (auto _ : state) {
    step_verlet(s, 0.05, 1, 1e-3);
    benchmark::DoNotOptimize(s.u.values.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.sites());
}
BENCHMARK(BM_VerletStep)->Arg(40)->Arg(400);

static void BM_HillAssemble(benchmark::State& state) {
  LatticeGrid grid(1, 8, Boundary::Dirichlet);
  SolitonBranch branch = solve_single_pulse(grid, 1, 5.0);
  BreatherSolution B = solve_breather(seed_from_soliton(branch, 0.05, 8));
  for (auto _ : state) {
    HillProblem prob = hill_assemble(B, int(state.range(0)));
    benchmark::DoNotOptimize(prob.companion.data());
  }
}
BENCHMARK(BM_HillAssemble)->Arg(4)->Arg(8);

static void BM_PoissonBracket(benchmark::State& state) {
  LatticeGrid grid(1, int(state.range(0)), Boundary::Dirichlet);
  auto H = nf::build_scaled_hamiltonian<std::complex<double>>(grid, 1, 8);
  auto G = nf::harmonic_action<std::complex<double>>(grid);
  for (auto _ : state) {
    auto b = nf::poisson(H, G, 8);
    benchmark::DoNotOptimize(&b);
  }
}
BENCHMARK(BM_PoissonBracket)->Arg(2)->Arg(4);

static void BM_LieTransform(benchmark::State& state) {
  LatticeGrid grid(1, int(state.range(0)), Boundary::Dirichlet);
  nf::NormalFormBudget budget;
  budget.order = 2;
  budget.eps = 0.01;
  for (auto _ : state) {
    auto res = nf::lie_transform_normal_form<std::complex<double>>(grid, 1, budget);
    benchmark::DoNotOptimize(&res);
  }
}
BENCHMARK(BM_LieTransform)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
