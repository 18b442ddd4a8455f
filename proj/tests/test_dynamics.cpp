#include <cmath>
#include <random>

#include "doctest.h"
#include "kgl/breather.hpp"
#include "kgl/dynamics.hpp"
#include "kgl/errors.hpp"

using namespace kgl;

namespace {

PhaseState random_state(const LatticeGrid& g, unsigned seed, double scale = 0.5) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  PhaseState s(g);
  for (int j = 0; j < g.sites(); ++j) {
    s.u.values[j] = dist(rng);
    s.v.values[j] = dist(rng);
  }
  return s;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("dynamics: decoupled flow is a rigid rotation and H collapses to G") {
    LatticeGrid g(1, 5);
    PhaseState s0 = random_state(g, 3);

    CHECK(hamiltonian(s0, 0.0, 1) == almost_invariant(s0));
    CHECK(hamiltonian(s0, 0.0, 3) == almost_invariant(s0));

    const double T = M_PI / 3.0;
    Eigen::VectorXd ue = s0.u.values * std::cos(T) + s0.v.values * std::sin(T);
    Eigen::VectorXd ve = s0.v.values * std::cos(T) - s0.u.values * std::sin(T);

    auto err = [&](double h) {
      PhaseState s = s0;
      integrate(s, 0.0, 1, h, std::llround(T / h));
      return (s.u.values - ue).norm() + (s.v.values - ve).norm();
    };
    const double e1 = err(T / 400), e2 = err(T / 800);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("dynamics: stepper orders against a fine reference") {
    LatticeGrid g(1, 4);
    PhaseState s0 = random_state(g, 11, 0.4);
    const double eps = 0.1, T = 1.0;

    PhaseState ref = s0;
    integrate(ref, eps, 1, T / 4096, 4096, true);

    auto err = [&](int n, bool fourth) {
      PhaseState s = s0;
      integrate(s, eps, 1, T / n, n, fourth);
      return (s.u.values - ref.u.values).norm() + (s.v.values - ref.v.values).norm();
    };

    CHECK(std::log2(err(64, false) / err(128, false)) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::log2(err(64, true) / err(128, true)) == doctest::Approx(4.0).epsilon(0.15));
  }

  TEST_CASE("dynamics: hamiltonian agrees with the explicit quadratic form") {
    for (int p : {1, 2}) {
      LatticeGrid g(1, 4);
      PhaseState s = random_state(g, 17 + p);
      const double eps = 0.07;
      Eigen::MatrixXd L = laplacian_matrix(g);
      const auto& u = s.u.values;
      double direct = 0.5 * (u.squaredNorm() + s.v.values.squaredNorm()) +
                      eps / (2.0 * p + 2.0) * u.array().pow(2 * p + 2).sum() +
                      0.5 * eps * u.dot(-L * u);
      CHECK(hamiltonian(s, eps, p) == doctest::Approx(direct).epsilon(1e-13));
      CHECK(almost_invariant(s) ==
            doctest::Approx(0.5 * (u.squaredNorm() + s.v.values.squaredNorm())).epsilon(1e-14));
    }
  }

  TEST_CASE("dynamics: acceleration is the gradient flow of H") {
    LatticeGrid g(1, 4);
    PhaseState s = random_state(g, 29);
    const double eps = 0.06;
    const int p = 2;
    Eigen::VectorXd a;
    acceleration(s.u, eps, p, a);

    // -dH/du via central differences
    for (int j : {0, 3, g.sites() - 1}) {
      PhaseState sp = s, sm = s;
      const double h = 1e-6;
      sp.u.values[j] += h;
      sm.u.values[j] -= h;
      double grad = (hamiltonian(sp, eps, p) - hamiltonian(sm, eps, p)) / (2.0 * h);
      CHECK(a[j] == doctest::Approx(-grad).epsilon(1e-7));
    }
  }

  TEST_CASE("dynamics: verlet energy error stays bounded over a long window") {
    LatticeGrid g(1, 5);
    PhaseState s = random_state(g, 5, 0.4);
    const double eps = 0.05, h = 0.005;
    const double H0 = hamiltonian(s, eps, 1);
    double worst = 0.0;
    for (int block = 0; block < 100; ++block) {
      integrate(s, eps, 1, h, 200);
      worst = std::max(worst, std::abs(hamiltonian(s, eps, 1) - H0));
    }
    CHECK(worst / std::abs(H0) < 1e-5);
  }

  TEST_CASE("dynamics: verlet is time reversible") {
    LatticeGrid g(1, 5);
    PhaseState s0 = random_state(g, 41);
    PhaseState s = s0;
    const int n = 2000;
    integrate(s, 0.08, 1, 0.01, n);
    s.v.values = -s.v.values;
    integrate(s, 0.08, 1, 0.01, n);
    s.v.values = -s.v.values;
    CHECK((s.u.values - s0.u.values).norm() < 1e-10);
    CHECK((s.v.values - s0.v.values).norm() < 1e-10);
  }

  TEST_CASE("dynamics: tangent flow is symplectic and consistent with differencing") {
    LatticeGrid g(1, 4);
    const int S = g.sites();
    PhaseState s = random_state(g, 53, 0.4);
    const double eps = 0.08, h = 0.01;

    std::mt19937 rng(59);
    std::normal_distribution<double> dist(0.0, 1.0);
    TangentState t;
    t.du.resize(S, 2);
    t.dv.resize(S, 2);
    for (int j = 0; j < S; ++j)
      for (int c = 0; c < 2; ++c) {
        t.du(j, c) = dist(rng);
        t.dv(j, c) = dist(rng);
      }

    const double k0 = tangent_pair_form(t.du.col(0), t.dv.col(0), t.du.col(1), t.dv.col(1));

    PhaseState sp = s, sm = s;
    const double eta = 1e-6;
    sp.u.values += eta * t.du.col(0);
    sp.v.values += eta * t.dv.col(0);
    sm.u.values -= eta * t.du.col(0);
    sm.v.values -= eta * t.dv.col(0);

    PhaseState base = s;
    for (int step = 0; step < 500; ++step) step_verlet_tangent(base, t, eps, 1, h);
    integrate(sp, eps, 1, h, 500);
    integrate(sm, eps, 1, h, 500);

    const double k1 = tangent_pair_form(t.du.col(0), t.dv.col(0), t.du.col(1), t.dv.col(1));
    CHECK(k1 == doctest::Approx(k0).epsilon(1e-12));

    Eigen::VectorXd fdu = (sp.u.values - sm.u.values) / (2.0 * eta);
    Eigen::VectorXd fdv = (sp.v.values - sm.v.values) / (2.0 * eta);
    CHECK((fdu - t.du.col(0)).norm() < 1e-6 * (1.0 + t.du.col(0).norm()));
    CHECK((fdv - t.dv.col(0)).norm() < 1e-6 * (1.0 + t.dv.col(0).norm()));

    // the base state advanced identically with and without tangent columns
    PhaseState plain = s;
    integrate(plain, eps, 1, h, 500);
    CHECK((plain.u.values - base.u.values).norm() == 0.0);
    CHECK((plain.v.values - base.v.values).norm() == 0.0);
  }

  TEST_CASE("dynamics: orbital run is reproducible and starts at the seeded offset") {
    LatticeGrid g(1, 6);
    SolitonBranch b = solve_single_pulse(g, 1, 5.0);
    BreatherSolution B = solve_breather(seed_from_soliton(b, 0.05, 8));

    const double delta = 1e-3;
    StabilityTrace a = orbital_stability_run(B, delta, 50.0, 0.01, 7, 100, 64);
    StabilityTrace c = orbital_stability_run(B, delta, 50.0, 0.01, 7, 100, 64);
    REQUIRE(a.times.size() == a.orbital_distance.size());
    REQUIRE(a.times.size() == a.H_values.size());
    CHECK(a.seed == 7);
    CHECK(a.delta == delta);
    CHECK(a.times == c.times);
    CHECK(a.H_values == c.H_values);
    CHECK(a.orbital_distance == c.orbital_distance);

    StabilityTrace d = orbital_stability_run(B, delta, 50.0, 0.01, 8, 100, 64);
    CHECK(a.orbital_distance != d.orbital_distance);

    CHECK(a.orbital_distance.front() <= 2.0 * delta);
    for (double x : a.orbital_distance) CHECK(x >= 0.0);
    const double H0 = a.H_values.front();
    for (double Hv : a.H_values) CHECK(std::abs(Hv - H0) < 1e-4 * std::abs(H0));
  }
}
