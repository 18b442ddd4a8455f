#include "kgl/dynamics.hpp"

#include <cmath>

#include "kgl/errors.hpp"

namespace kgl {

namespace {

double intpow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

double hamiltonian(const PhaseState& s, double eps, int p) {
  const Eigen::VectorXd& u = s.u.values;
  double h = 0.5 * (u.squaredNorm() + s.v.values.squaredNorm());
  double quart = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) quart += intpow(u[i], 2 * p + 2);
  h += eps / (2.0 * p + 2.0) * quart;
  Eigen::VectorXd lap(u.size());
  laplacian_into(s.u, lap);
  h -= 0.5 * eps * u.dot(lap);
  return h;
}

double almost_invariant(const PhaseState& s) {
  return 0.5 * (s.u.values.squaredNorm() + s.v.values.squaredNorm());
}

void acceleration(const RealField& u, double eps, int p, Eigen::VectorXd& out) {
  laplacian_into(u, out);
  const Eigen::VectorXd& uv = u.values;
  for (Eigen::Index i = 0; i < uv.size(); ++i)
    out[i] = -uv[i] - eps * intpow(uv[i], 1 + 2 * p) + eps * out[i];
}

void step_verlet(PhaseState& s, double eps, int p, double h) {
  Eigen::VectorXd acc(s.u.values.size());
  acceleration(s.u, eps, p, acc);
  s.v.values += 0.5 * h * acc;
  s.u.values += h * s.v.values;
  acceleration(s.u, eps, p, acc);
  s.v.values += 0.5 * h * acc;
  s.time += h;
}

void step_order4(PhaseState& s, double eps, int p, double h) {
  // Yoshida coefficients: w1 = 1/(2 - 2^{1/3}), w0 = -2^{1/3} w1
  static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  static const double w0 = 1.0 - 2.0 * w1;
  step_verlet(s, eps, p, w1 * h);
  step_verlet(s, eps, p, w0 * h);
  step_verlet(s, eps, p, w1 * h);
}

void integrate(PhaseState& s, double eps, int p, double h, int64_t nsteps, bool fourth_order) {
  for (int64_t k = 0; k < nsteps; ++k) {
    if (fourth_order)
      step_order4(s, eps, p, h);
    else
      step_verlet(s, eps, p, h);
  }
}

void step_verlet_tangent(PhaseState& s, TangentState& t, double eps, int p, double h) {
  const Eigen::Index n = s.u.values.size();
  Eigen::VectorXd acc(n), fprime(n);
  const LatticeGrid& grid = s.u.grid;

  auto kick = [&](double dt) {
    acceleration(s.u, eps, p, acc);
    // d(acc)/du = -1 - eps(1+2p) u^{2p} on the diagonal, plus eps Lap
    for (Eigen::Index i = 0; i < n; ++i)
      fprime[i] = -1.0 - eps * (1 + 2 * p) * intpow(s.u.values[i], 2 * p);
    for (int c = 0; c < t.du.cols(); ++c) {
      Eigen::VectorXd lap(n);
      laplacian_into(RealField(grid, t.du.col(c)), lap);
      t.dv.col(c) += dt * (fprime.asDiagonal() * t.du.col(c) + eps * lap);
    }
    s.v.values += dt * acc;
  };

  kick(0.5 * h);
  s.u.values += h * s.v.values;
  t.du += h * t.dv;
  kick(0.5 * h);
  s.time += h;
}

double tangent_pair_form(const Eigen::VectorXd& du_a, const Eigen::VectorXd& dv_a,
                         const Eigen::VectorXd& du_b, const Eigen::VectorXd& dv_b) {
  return 2.0 * (du_a.dot(dv_b) - du_b.dot(dv_a));
}

}  // namespace kgl
