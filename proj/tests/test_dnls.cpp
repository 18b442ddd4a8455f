#include <cmath>
#include <random>

#include "doctest.h"
#include "kgl/dnls.hpp"
#include "kgl/errors.hpp"
#include "kgl/stability.hpp"

using namespace kgl;

namespace {

RealField randf(const LatticeGrid& g, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  RealField f(g);
  for (int i = 0; i < g.sites(); ++i) f.values[i] = d(rng);
  return f;
}

// observed convergence order of the central finite-difference Jacobian
double fd_jacobian_order(const RealField& A, const DnlsParams& prm) {
  const Eigen::MatrixXd J = dnls_jacobian(A, prm);
  const int S = A.grid.sites();
  auto fd_err = [&](double h) {
    Eigen::MatrixXd Jfd(S, S);
    RealField Ap = A, Am = A;
    for (int j = 0; j < S; ++j) {
      Ap.values[j] += h;
      Am.values[j] -= h;
      Jfd.col(j) = (dnls_residual(Ap, prm).values - dnls_residual(Am, prm).values) / (2 * h);
      Ap.values[j] = A.values[j];
      Am.values[j] = A.values[j];
    }
    return (Jfd - J).norm();
  };
  const double e1 = fd_err(1e-4), e2 = fd_err(5e-5);
  return std::log2(e1 / e2);
}

}  // namespace

TEST_SUITE_BEGIN("dnls");

TEST_CASE("dnls: coupling coefficient is the central binomial of the power") {
  CHECK(gamma_coupling(1) == doctest::Approx(3.0));    // binom(3,2)
  CHECK(gamma_coupling(2) == doctest::Approx(10.0));   // binom(5,3)
  CHECK(gamma_coupling(3) == doctest::Approx(35.0));   // binom(7,4)
  CHECK(gamma_coupling(4) == doctest::Approx(126.0));  // binom(9,5)
}

TEST_CASE("dnls: frequencies inside [-4d, 0] are rejected") {
  CHECK_THROWS_AS(DnlsParams(1, -2.0).check(1), ConfigInvalid);
  CHECK_THROWS_AS(DnlsParams(1, 0.0).check(1), ConfigInvalid);
  CHECK_THROWS_AS(DnlsParams(1, -4.0).check(1), ConfigInvalid);
  CHECK_NOTHROW(DnlsParams(1, -4.5).check(1));
  CHECK_NOTHROW(DnlsParams(1, 1.0).check(1));
  CHECK_THROWS_AS(DnlsParams(1, -7.9).check(2), ConfigInvalid);
}

TEST_CASE("dnls: anticontinuum seed puts the one-site amplitude at the center") {
  LatticeGrid g(1, 5);
  RealField seed = anticontinuum_seed(g, 2, 7.0);
  CHECK(seed.values[g.index({0})] == doctest::Approx(std::pow(7.0 / 10.0, 0.25)));
  CHECK(seed.values.cwiseAbs().sum() == doctest::Approx(seed.values[g.index({0})]));
}

TEST_CASE("dnls: single pulse converges with a tiny residual orthogonal to anything") {
  LatticeGrid g(1, 10);
  SolitonBranch b = solve_single_pulse(g, 1, 5.0);
  CHECK(b.residual_norm < 1e-12);
  CHECK(b.jacobian_min_singular_value > 1.0);
  RealField r = dnls_residual(b.amplitude, b.params);
  RealField probe = randf(g, 3);
  CHECK(std::abs(r.values.dot(probe.values)) <= 1e-12 * probe.values.norm());
  // decays away from the center
  CHECK(boundary_shell_norm(b.amplitude) < 1e-8 * l2_norm(b.amplitude));
}

TEST_CASE("dnls: jacobian is symmetric and matches finite differences at second order") {
  LatticeGrid g(1, 6);
  DnlsParams prm(1, -9.0);
  RealField A = randf(g, 17, 0.7);
  Eigen::MatrixXd J = dnls_jacobian(A, prm);
  CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fd_jacobian_order(A, prm) >= 1.9);

  DnlsParams prm2(2, -13.0);
  LatticeGrid g2(2, 2);
  CHECK(fd_jacobian_order(randf(g2, 23, 0.5), prm2) >= 1.9);
}

TEST_CASE("dnls: mass and energy match direct sums") {
  LatticeGrid g(1, 6);
  DnlsParams prm(2, -10.0);
  RealField A = randf(g, 29, 0.6);
  auto [nu, E] = mass_and_energy(A, prm);
  CHECK(nu == doctest::Approx(A.values.squaredNorm()).epsilon(1e-13));
  const Eigen::MatrixXd L = laplacian_matrix(g);
  double pow_sum = 0;
  for (int i = 0; i < g.sites(); ++i) pow_sum += std::pow(A.values[i], 2 * prm.p + 2);
  const double E_direct =
      2.0 * A.values.dot(-(L * A.values)) - pow_sum / (prm.p + 1.0);
  CHECK(E == doctest::Approx(E_direct).epsilon(1e-12));
}

TEST_CASE("dnls: positive-frame solve plus staggering equals the direct staggered solve") {
  LatticeGrid g(1, 8);
  const double tol = 1e-12;
  for (double ot : {2.0, 3.5, 5.0, 8.0, 12.0}) {
    SolitonBranch via_stagger = solve_single_pulse(g, 1, ot, tol);
    RealField seed = anticontinuum_seed(g, 1, ot);
    for (int i = 0; i < g.sites(); ++i) seed.values[i] *= g.parity(i);
    SolitonBranch direct = solve_soliton(DnlsParams(1, -4.0 - ot), g, seed, tol);
    CHECK((via_stagger.amplitude.values - direct.amplitude.values).norm() < 2 * tol);
    CHECK(via_stagger.params.omega == doctest::Approx(direct.params.omega));
  }
}

TEST_CASE("dnls: power curve walks omega_tilde and stays converged") {
  LatticeGrid g(1, 8);
  auto pts = power_curve(g, 1, 2.0, 10.0, 9, 1e-12);
  CHECK(pts.size() == 9);
  CHECK(pts.front().omega_tilde == doctest::Approx(2.0));
  CHECK(pts.back().omega_tilde == doctest::Approx(10.0));
  for (const auto& pt : pts) {
    CHECK(pt.residual_norm < 1e-11);
    CHECK(pt.mass > 0.0);
    CHECK(pt.omega == doctest::Approx(-4.0 - pt.omega_tilde));
  }
  // mass grows with omega_tilde on the single-pulse branch (p=1)
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].mass > pts[i - 1].mass);
}

TEST_CASE("dnls: linearization spectrum is symmetric under negation and conjugation") {
  LatticeGrid g(1, 8);
  SolitonBranch b = solve_single_pulse(g, 1, 5.0);
  auto spec = dnls_spectrum(b);
  for (const auto& pr : spec) {
    bool has_neg = false, has_conj = false;
    for (const auto& qr : spec) {
      if (std::abs(qr.lambda + pr.lambda) < 1e-8) has_neg = true;
      if (std::abs(qr.lambda - std::conj(pr.lambda)) < 1e-8) has_conj = true;
    }
    CHECK(has_neg);
    CHECK(has_conj);
  }
}

TEST_CASE("dnls: single pulse is spectrally stable away from the zero cluster") {
  LatticeGrid g(1, 10);
  SolitonBranch b = solve_single_pulse(g, 1, 6.0);
  auto spec = dnls_spectrum(b);
  bool found_zero_cluster = false;
  for (const auto& pr : spec) {
    if (std::abs(pr.lambda) < 1e-6) {
      found_zero_cluster = true;
      CHECK(pr.cluster_size >= 2);
      continue;
    }
    CHECK(std::abs(pr.lambda.real()) < 1e-8);
  }
  CHECK(found_zero_cluster);
}

TEST_CASE("dnls: band eigenvalues sit between |Omega| and |Omega + 4d|") {
  LatticeGrid g(1, 10);
  SolitonBranch b = solve_single_pulse(g, 1, 6.0);  // Omega = -10
  const double lo = 6.0, hi = 10.0;
  int in_band = 0;
  for (const auto& pr : dnls_spectrum(b)) {
    if (!pr.in_band) continue;
    ++in_band;
    const double two_im = std::abs(2.0 * pr.lambda.imag());
    CHECK(two_im >= lo - 1e-3);
    CHECK(two_im <= hi + 1e-3);
  }
  CHECK(in_band >= 2 * (g.sites() - 4));  // almost all of the doubled spectrum
}

TEST_CASE("dnls: twisted pulse carries one simple isolated gap mode with positive Krein sign") {
  LatticeGrid g(1, 12);
  SolitonBranch b = solve_twisted_pulse(g, 1, 12.0);
  CHECK(b.residual_norm < 1e-12);
  auto spec = dnls_spectrum(b);
  DnlsSpectralPair t = pick_reference_eigenvalue(spec);
  CHECK(std::abs(t.lambda.real()) < 1e-10);
  CHECK(t.lambda.imag() > 1.0);
  CHECK(2.0 * t.lambda.imag() < 12.0);  // strictly below the band
  CHECK(t.krein_sign == 1);
  CHECK(t.cluster_size == 1);
  // it is the only isolated imaginary mode
  int isolated = 0;
  for (const auto& pr : spec)
    if (!pr.in_band && pr.krein_sign != 0 && std::abs(pr.lambda.real()) < 1e-8 &&
        pr.lambda.imag() > 1e-6)
      ++isolated;
  CHECK(isolated == 1);
}

TEST_CASE("dnls: in-phase two-site branch is unstable with a zero-Krein real pair") {
  LatticeGrid g(1, 12);
  DnlsParams prm(1, -16.0);
  const double a = std::sqrt(12.0 / prm.gamma);
  RealField seed(g);
  seed.values[g.index({0})] = a;
  seed.values[g.index({1})] = -a;  // out-of-phase in the staggered frame
  SolitonBranch b = solve_soliton(prm, g, seed);
  CHECK(b.residual_norm < 1e-12);
  double max_re = 0.0;
  int real_pairs = 0;
  for (const auto& pr : dnls_spectrum(b)) {
    max_re = std::max(max_re, std::abs(pr.lambda.real()));
    if (std::abs(pr.lambda.real()) > 1e-4) {
      ++real_pairs;
      CHECK(pr.krein_sign == 0);
    }
  }
  CHECK(max_re > 1.0);
  CHECK(real_pairs == 2);
}

TEST_CASE("dnls: zero seed is rejected") {
  LatticeGrid g(1, 4);
  RealField zero(g);
  CHECK_THROWS_AS(solve_soliton(DnlsParams(1, -9.0), g, zero), ConfigInvalid);
}

TEST_SUITE_END();
