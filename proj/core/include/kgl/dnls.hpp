#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kgl/lattice.hpp"

namespace kgl {

// binomial(2p+1, p+1): 3, 10, 35, ... for p = 1, 2, 3, ...
double gamma_coupling(int p);

struct DnlsParams {
  int p = 1;
  double omega = -6.0;  // frequency parameter, admissible only outside [-4d, 0]
  double gamma = 3.0;

  DnlsParams() = default;
  DnlsParams(int p_, double omega_);
  void check(int dim) const;  // throws ConfigInvalid on inadmissible values
};

struct SolitonBranch {
  DnlsParams params;
  RealField amplitude;
  double residual_norm = 0.0;
  double jacobian_min_singular_value = 0.0;
  double mass = 0.0;    // nu = sum A^2
  double energy = 0.0;
};

// Omega*A + gamma*A^{2p+1} - Laplacian(A), the stationary equation residual.
RealField dnls_residual(const RealField& A, const DnlsParams& prm);

// Symmetric Jacobian Omega + (1+2p)*gamma*A^{2p} - Laplacian (dense).
Eigen::MatrixXd dnls_jacobian(const RealField& A, const DnlsParams& prm);

// nu = sum A^2 and E = 2<A, -Lap A> - (1/(p+1)) sum A^{2p+2}.  The coupling
// term equals the double sum over ordered neighbor pairs of |A_k - A_n|^2
// with zero extension past a Dirichlet edge.
std::pair<double, double> mass_and_energy(const RealField& A, const DnlsParams& prm);

// Single-site profile balancing Omega_tilde * a = gamma * a^{2p}, the seed of
// the small-coupling pulse family in the positive-frequency frame.
RealField anticontinuum_seed(const LatticeGrid& grid, int p, double omega_tilde);

// Newton on dnls_residual from the given seed.  Throws ConfigInvalid on a
// zero seed (A = 0 solves the equation trivially and is rejected),
// NonConvergence / SingularJacobian on solver failure.
SolitonBranch solve_soliton(const DnlsParams& prm, const LatticeGrid& grid,
                            const RealField& seed, double tol = 1e-12, int max_iter = 50);

// Newton on the positive-frame equation -Ot*A + gamma*A^{2p+1} + Lap(A) = 0,
// which the parity map carries to dnls_residual at Omega = -4d - Ot on
// Dirichlet grids.
RealField solve_positive_frame(const LatticeGrid& grid, int p, double omega_tilde,
                               const RealField& seed, double tol = 1e-12, int max_iter = 50);

// Standard constructor for the single pulse at Omega = -4d - omega_tilde:
// positive-frame Newton from the anticontinuum seed, staggered back.
SolitonBranch solve_single_pulse(const LatticeGrid& grid, int p, double omega_tilde,
                                 double tol = 1e-12);

// Twisted (out-of-phase) two-site pulse at Omega = -4d - omega_tilde: the
// positive-frame seed puts +a at the center and -a at its first-axis
// neighbor.  Unlike the single pulse its linearization carries an internal
// mode; the mode sits in the gap below the band once omega_tilde is large
// enough (around 8 for p=1, d=1) and is band-embedded before that.
SolitonBranch solve_twisted_pulse(const LatticeGrid& grid, int p, double omega_tilde,
                                  double tol = 1e-12);

struct PowerCurvePoint {
  double omega_tilde = 0.0;
  double omega = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double residual_norm = 0.0;
};

// Continuation of the single pulse over an omega_tilde grid (step bisection on
// Newton failure).  Reported mass/energy are those of the staggered profile.
std::vector<PowerCurvePoint> power_curve(const LatticeGrid& grid, int p, double ot_begin,
                                         double ot_end, int count, double tol = 1e-12);

struct DnlsSpectralPair {
  std::complex<double> lambda;  // eigenvalue Lambda of the linearization pencil
  Eigen::VectorXcd b_plus, b_minus;
  double krein_value = 0.0;
  int krein_sign = 0;     // 0 when |value| below threshold (zero/defective modes)
  bool in_band = false;   // 2*Lambda within 1e-3 of +-i*[|Omega|, |Omega+4d|] interval
  double residual = 0.0;  // block-pencil residual, relative
  int cluster_size = 1;   // eigenvalues of the pencil within 1e-6
};

// Linearization spectrum about a soliton: block eigenproblem
//   [0, -L0; L1, 0] (b+, b-) = 2 Lambda (b+, b-)
// with L0 = Omega - Lap + gamma A^{2p}, L1 = Omega - Lap + (1+2p) gamma A^{2p}.
std::vector<DnlsSpectralPair> dnls_spectrum(const SolitonBranch& branch);

}  // namespace kgl
