#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "kgl/lattice.hpp"

namespace kgl {

struct PhaseState {
  RealField u, v;
  double time = 0.0;

  PhaseState() = default;
  explicit PhaseState(const LatticeGrid& grid) : u(grid), v(grid) {}
  PhaseState(RealField u_, RealField v_) : u(std::move(u_)), v(std::move(v_)) {}
};

// H = 1/2 sum(u^2 + v^2) + eps/(2p+2) sum u^{2p+2} + eps/2 <u, -Lap u>
double hamiltonian(const PhaseState& s, double eps, int p);

// G = 1/2 sum(u^2 + v^2), the harmonic part; drifts only at O(eps) rate.
double almost_invariant(const PhaseState& s);

// udot = v, vdot = -u - eps u^{1+2p} + eps Lap u
void acceleration(const RealField& u, double eps, int p, Eigen::VectorXd& out);

// One kick-drift-kick step of size h.
void step_verlet(PhaseState& s, double eps, int p, double h);

// Triple-jump composition of the verlet kernel, global order 4.
void step_order4(PhaseState& s, double eps, int p, double h);

void integrate(PhaseState& s, double eps, int p, double h, int64_t nsteps,
               bool fourth_order = false);

// Tangent vectors advanced through the same kick-drift-kick shears as the
// base state, so the tangent map is symplectic to machine precision.
struct TangentState {
  Eigen::MatrixXd du, dv;  // one column per tangent vector
};
void step_verlet_tangent(PhaseState& s, TangentState& t, double eps, int p, double h);

// Loop invariant of the linearized flow: k(w) = i sum_j (w wbar' - wbar w'),
// i.e. 2 (<Re w, Im w'> - <Im w, Re w'>) for complex w encoded as two columns.
double tangent_pair_form(const Eigen::VectorXd& du_a, const Eigen::VectorXd& dv_a,
                         const Eigen::VectorXd& du_b, const Eigen::VectorXd& dv_b);

struct StabilityTrace {
  std::vector<double> times, H_values, G_values, orbital_distance;
  uint64_t seed = 0;
  double delta = 0.0;
};

}  // namespace kgl
