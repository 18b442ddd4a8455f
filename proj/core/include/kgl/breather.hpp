#pragma once

#include <vector>

#include <Eigen/Core>

#include "kgl/dnls.hpp"
#include "kgl/dynamics.hpp"

namespace kgl {

// FixFrequencyParam slaves omega to sqrt(1 - eps*Omega) and solves for the
// profile alone; FixPeriod keeps the stored omega.
enum class BreatherMode { FixFrequencyParam, FixPeriod };

// Time-reversible breather ansatz U(tau) = A0 + 2 sum_{m>=1} A^m cos(m tau),
// tau = omega t; harmonics[m] holds the exponential Fourier coefficient A^m.
struct BreatherSolution {
  LatticeGrid grid;
  std::vector<Eigen::VectorXd> harmonics;
  double omega = 1.0;
  double eps = 0.0;
  DnlsParams params;
  double residual_norm = 0.0;
  int newton_iterations = 0;

  int harmonic_count() const { return static_cast<int>(harmonics.size()) - 1; }
  double period() const;
  Eigen::VectorXd profile_at(double tau) const;
  Eigen::VectorXd profile_derivative_at(double tau) const;  // dU/dtau
  PhaseState initial_state() const;                         // (U(0), omega U'(0))
  double tail_ratio() const;                                // ||A^M|| / ||A^1||
};

// A^1 = soliton amplitude, all other harmonics zero, omega = sqrt(1-eps*Omega).
// Throws InvalidFrequency when 1 - eps*Omega <= 0, ConfigInvalid for M < 3.
BreatherSolution seed_from_soliton(const SolitonBranch& branch, double eps, int M);

// Residual of the harmonic system:
//   (1 - m^2 omega^2) A^m + eps P_m[U^{1+2p}] - eps Lap A^m,
// P_m the dealiased trigonometric projection onto cos(m tau).
std::vector<Eigen::VectorXd> breather_residual(const BreatherSolution& B);
double breather_residual_norm(const BreatherSolution& B);

// Square Jacobian of the stacked residual at fixed omega.
Eigen::MatrixXd breather_jacobian(const BreatherSolution& B);

// Damped Newton on the stacked harmonics.  When the converged tail ratio
// ||A^M||/||A^1|| exceeds 1e-3 the harmonic count doubles and the solve
// repeats (three attempts, then NonConvergence).
BreatherSolution solve_breather(const BreatherSolution& seed, double tol = 1e-12,
                                BreatherMode mode = BreatherMode::FixFrequencyParam,
                                int max_iter = 50);

struct BoundReport {
  std::vector<double> eps_list;
  std::vector<double> omega_err;    // |omega - 1 + eps*Omega/2|
  std::vector<double> profile_err;  // ||A^1 - soliton||
  std::vector<double> tail_err;     // ||A^0|| + sum_{m>=2} ||A^m||
  std::vector<bool> converged;
  double omega_slope = 0.0;
  double profile_slope = 0.0;
  double tail_slope = 0.0;
};

// Small-coupling error sweep against the dNLS profile.  Preconditions: eps
// strictly decreasing, all in (0, 0.1).  Solver failures mark the entry and
// drop it from the fits.
BoundReport verify_bounds(const SolitonBranch& branch, const std::vector<double>& eps_list,
                          double tol = 1e-12, int M = 0);

// Integrates the full flow over one period with the 4th-order stepper and
// returns ||z(T) - z(0)|| / ||z(0)||.
double time_domain_check(const BreatherSolution& B, double h_over_T = 5e-4);

// Perturb the initial point by a gaussian vector of norm delta, march with the
// verlet stepper, and record H, G and the distance to the breather loop
// (minimum over phase_samples points on the orbit).
StabilityTrace orbital_stability_run(const BreatherSolution& B, double delta, double T_final,
                                     double h, uint64_t seed, int sample_count = 2000,
                                     int phase_samples = 256);

}  // namespace kgl
