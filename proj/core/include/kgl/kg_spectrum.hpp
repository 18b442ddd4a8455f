#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "kgl/breather.hpp"

namespace kgl {

struct KgSpectralPair {
  std::complex<double> lambda;  // Floquet exponent
  // Fourier components of the eigenfunction, m = -M_spec..M_spec stored at
  // index m + M_spec, each of lattice size
  std::vector<Eigen::VectorXcd> harmonics;
  double krein = 0.0;
  std::complex<double> floquet;  // exp(2 pi lambda / omega)
  double residual = 0.0;         // relative residual in the quadratic pencil
  // 2*lambda/eps within 1e-3 of the linearization band of the limit problem,
  // where the matched-eigenvalue continuation argument degenerates
  bool near_band = false;
};

// Fourier-in-time truncation of the linearization about the breather:
//   [1 + (lambda + i m omega)^2] B^m + eps(1+2p) sum_k C^(m-k) B^k = eps Lap B^m.
// With lambda = i sigma this realifies to the companion pencil
//   sigma [B; Y] = [[0, I], [D0, -2 omega Mhat]] [B; Y],
// D0 real symmetric, Mhat = diag(m I).
struct HillProblem {
  LatticeGrid grid;
  int M_spec = 0;
  double omega = 1.0;        // breather frequency
  double omega_param = 0.0;  // dNLS frequency parameter, fixes the band location
  double eps = 0.0;
  int p = 1;
  Eigen::MatrixXd D0;         // K x K, K = (2 M_spec + 1) S
  Eigen::MatrixXd companion;  // 2K x 2K
};

// Cosine coefficients C^(k), k = 0..kmax, of U(tau)^{2p} per site.
std::vector<Eigen::VectorXd> nonlinearity_fourier(const BreatherSolution& B, int kmax);

HillProblem hill_assemble(const BreatherSolution& B, int M_spec);

// All companion eigenvalues as exponents lambda = i sigma.
std::vector<std::complex<double>> hill_exponents(const HillProblem& prob);

// The `count` eigenpairs with lambda closest to 0, eigenvectors unpacked into
// Fourier components, Krein quantity K = sum_m (2 omega m + 2 Im lambda) |B^m|^2.
std::vector<KgSpectralPair> eigen_near_zero(const HillProblem& prob, int count);

// Floquet multipliers restricted to exponents in the fundamental strip
// Im(lambda) in (-omega/2, omega/2].
std::vector<std::complex<double>> hill_multipliers(const HillProblem& prob);

// Independent period map: RK4 integration of
//   w'' = -w - eps(1+2p) U(omega t)^{2p} w + eps Lap w
// over one period for a full basis; nsteps time steps.
Eigen::MatrixXd monodromy_matrix(const BreatherSolution& B, int nsteps);
std::vector<std::complex<double>> monodromy_multipliers(const BreatherSolution& B, int nsteps);

}  // namespace kgl
