#include "kgl/dnls.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kgl/errors.hpp"

namespace kgl {

namespace {

// x^n for small integer n, elementwise handled by callers
double intpow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

Eigen::VectorXd elementwise_pow(const Eigen::VectorXd& x, int n) {
  Eigen::VectorXd r(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = intpow(x[i], n);
  return r;
}

struct NewtonProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

// Damped Newton; halves the step while the residual norm grows.
Eigen::VectorXd newton_solve(const NewtonProblem& prob, Eigen::VectorXd x, double tol,
                             int max_iter) {
  Eigen::VectorXd res = prob.residual(x);
  double rnorm = res.norm();
  for (int it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) return x;
    Eigen::MatrixXd J = prob.jacobian(x);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd dx = lu.solve(res);
    if ((J * dx - res).norm() > 1e-8 * std::max(rnorm, 1.0) || !dx.allFinite())
      throw SingularJacobian("linear solve failed at residual " + std::to_string(rnorm));
    double damp = 1.0;
    for (int k = 0; k < 12; ++k) {
      Eigen::VectorXd trial = x - damp * dx;
      Eigen::VectorXd tres = prob.residual(trial);
      double tnorm = tres.norm();
      if (tnorm < rnorm || tnorm <= tol) {
        x = trial;
        res = tres;
        rnorm = tnorm;
        break;
      }
      damp *= 0.5;
      if (k == 11) throw NonConvergence("Newton stalled at residual " + std::to_string(rnorm));
    }
  }
  if (rnorm <= tol) return x;
  throw NonConvergence("Newton hit the iteration cap at residual " + std::to_string(rnorm));
}

}  // namespace

double gamma_coupling(int p) {
  if (p < 1 || p > 12) throw ConfigInvalid("nonlinearity exponent p must be in [1, 12]");
  // binomial(2p+1, p+1)
  double r = 1.0;
  for (int i = 1; i <= p; ++i) r = r * (p + 1 + i) / i;
  return r;
}

DnlsParams::DnlsParams(int p_, double omega_) : p(p_), omega(omega_), gamma(gamma_coupling(p_)) {}

void DnlsParams::check(int dim) const {
  if (p < 1) throw ConfigInvalid("p must be >= 1");
  if (omega >= -4.0 * dim && omega <= 0.0)
    throw ConfigInvalid("frequency parameter " + std::to_string(omega) +
                        " lies in the phonon interval [" + std::to_string(-4.0 * dim) + ", 0]");
}

RealField dnls_residual(const RealField& A, const DnlsParams& prm) {
  RealField r(A.grid);
  laplacian_into(A, r.values);
  r.values = prm.omega * A.values + prm.gamma * elementwise_pow(A.values, 2 * prm.p + 1) - r.values;
  return r;
}

Eigen::MatrixXd dnls_jacobian(const RealField& A, const DnlsParams& prm) {
  Eigen::MatrixXd J = -laplacian_matrix(A.grid);
  const double c = (1 + 2 * prm.p) * prm.gamma;
  for (int i = 0; i < A.grid.sites(); ++i)
    J(i, i) += prm.omega + c * intpow(A.values[i], 2 * prm.p);
  return J;
}

std::pair<double, double> mass_and_energy(const RealField& A, const DnlsParams& prm) {
  const double nu = A.values.squaredNorm();
  Eigen::VectorXd lap(A.grid.sites());
  laplacian_into(A, lap);
  const double coupling = -2.0 * A.values.dot(lap);
  double quart = 0.0;
  for (int i = 0; i < A.grid.sites(); ++i) quart += intpow(A.values[i], 2 * prm.p + 2);
  return {nu, coupling - quart / (prm.p + 1)};
}

RealField anticontinuum_seed(const LatticeGrid& grid, int p, double omega_tilde) {
  if (omega_tilde <= 0) throw ConfigInvalid("anticontinuum seed needs omega_tilde > 0");
  RealField f(grid);
  std::vector<int> origin(grid.dim(), 0);
  f.values[grid.index(origin)] = std::pow(omega_tilde / gamma_coupling(p), 1.0 / (2 * p));
  return f;
}

SolitonBranch solve_soliton(const DnlsParams& prm, const LatticeGrid& grid,
                            const RealField& seed, double tol, int max_iter) {
  prm.check(grid.dim());
  if (!(seed.grid == grid)) throw ConfigInvalid("seed grid mismatch");
  if (seed.values.norm() == 0.0) throw ConfigInvalid("seed must be nonzero: A = 0 is the trivial solution");

  NewtonProblem prob;
  prob.residual = [&](const Eigen::VectorXd& x) {
    return dnls_residual(RealField(grid, x), prm).values;
  };
  prob.jacobian = [&](const Eigen::VectorXd& x) {
    return dnls_jacobian(RealField(grid, x), prm);
  };
  Eigen::VectorXd x = newton_solve(prob, seed.values, tol, max_iter);

  SolitonBranch b;
  b.params = prm;
  b.amplitude = RealField(grid, x);
  b.residual_norm = prob.residual(x).norm();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(prob.jacobian(x));
  b.jacobian_min_singular_value = svd.singularValues().tail(1)(0);
  std::tie(b.mass, b.energy) = mass_and_energy(b.amplitude, prm);
  return b;
}

RealField solve_positive_frame(const LatticeGrid& grid, int p, double omega_tilde,
                               const RealField& seed, double tol, int max_iter) {
  if (omega_tilde <= 0) throw ConfigInvalid("positive-frame solve needs omega_tilde > 0");
  if (seed.values.norm() == 0.0) throw ConfigInvalid("seed must be nonzero");
  const double g = gamma_coupling(p);

  NewtonProblem prob;
  prob.residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd lap(grid.sites());
    laplacian_into(RealField(grid, x), lap);
    return Eigen::VectorXd(-omega_tilde * x + g * elementwise_pow(x, 2 * p + 1) + lap);
  };
  prob.jacobian = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd J = laplacian_matrix(grid);
    const double c = (1 + 2 * p) * g;
    for (int i = 0; i < grid.sites(); ++i) J(i, i) += -omega_tilde + c * intpow(x[i], 2 * p);
    return J;
  };
  return RealField(grid, newton_solve(prob, seed.values, tol, max_iter));
}

SolitonBranch solve_single_pulse(const LatticeGrid& grid, int p, double omega_tilde,
                                 double tol) {
  RealField pos = solve_positive_frame(grid, p, omega_tilde,
                                       anticontinuum_seed(grid, p, omega_tilde), tol);
  auto [staggered, omega] = stagger(pos, omega_tilde);
  DnlsParams prm(p, omega);

  SolitonBranch b;
  b.params = prm;
  b.amplitude = staggered;
  b.residual_norm = dnls_residual(staggered, prm).values.norm();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dnls_jacobian(staggered, prm));
  b.jacobian_min_singular_value = svd.singularValues().tail(1)(0);
  std::tie(b.mass, b.energy) = mass_and_energy(staggered, prm);
  return b;
}

SolitonBranch solve_twisted_pulse(const LatticeGrid& grid, int p, double omega_tilde,
                                  double tol) {
  RealField seed = anticontinuum_seed(grid, p, omega_tilde);
  std::vector<int> site(grid.dim(), 0);
  site[0] = 1;
  const double a = seed.values[grid.index(std::vector<int>(grid.dim(), 0))];
  seed.values[grid.index(site)] = -a;

  RealField pos = solve_positive_frame(grid, p, omega_tilde, seed, tol);
  auto [staggered, omega] = stagger(pos, omega_tilde);
  DnlsParams prm(p, omega);

  SolitonBranch b;
  b.params = prm;
  b.amplitude = staggered;
  b.residual_norm = dnls_residual(staggered, prm).values.norm();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dnls_jacobian(staggered, prm));
  b.jacobian_min_singular_value = svd.singularValues().tail(1)(0);
  std::tie(b.mass, b.energy) = mass_and_energy(staggered, prm);
  return b;
}

std::vector<PowerCurvePoint> power_curve(const LatticeGrid& grid, int p, double ot_begin,
                                         double ot_end, int count, double tol) {
  if (count < 2) throw ConfigInvalid("power curve needs at least two points");
  if (ot_begin <= 0 || ot_end <= 0) throw ConfigInvalid("power curve needs omega_tilde > 0");

  std::vector<PowerCurvePoint> pts;
  RealField profile = anticontinuum_seed(grid, p, ot_begin);

  // Walk the parameter continuously; on failure bisect toward the last good value.
  std::function<RealField(double, double, const RealField&, int)> advance =
      [&](double from, double to, const RealField& seed, int depth) -> RealField {
    try {
      return solve_positive_frame(grid, p, to, seed, tol);
    } catch (const Error&) {
      if (depth >= 8) throw;
      const double mid = 0.5 * (from + to);
      RealField half = advance(from, mid, seed, depth + 1);
      return advance(mid, to, half, depth + 1);
    }
  };

  double prev_ot = ot_begin;
  for (int i = 0; i < count; ++i) {
    const double ot = ot_begin + (ot_end - ot_begin) * i / (count - 1);
    profile = (i == 0) ? solve_positive_frame(grid, p, ot, profile, tol)
                       : advance(prev_ot, ot, profile, 0);
    prev_ot = ot;
    auto [staggered, omega] = stagger(profile, ot);
    DnlsParams prm(p, omega);
    PowerCurvePoint pt;
    pt.omega_tilde = ot;
    pt.omega = omega;
    std::tie(pt.mass, pt.energy) = mass_and_energy(staggered, prm);
    pt.residual_norm = dnls_residual(staggered, prm).values.norm();
    pts.push_back(pt);
  }
  return pts;
}

std::vector<DnlsSpectralPair> dnls_spectrum(const SolitonBranch& branch) {
  const LatticeGrid& grid = branch.amplitude.grid;
  const int S = grid.sites();
  const DnlsParams& prm = branch.params;

  Eigen::MatrixXd lap = laplacian_matrix(grid);
  Eigen::MatrixXd L0 = -lap, L1 = -lap;
  for (int i = 0; i < S; ++i) {
    const double a2p = intpow(branch.amplitude.values[i], 2 * prm.p);
    L0(i, i) += prm.omega + prm.gamma * a2p;
    L1(i, i) += prm.omega + (1 + 2 * prm.p) * prm.gamma * a2p;
  }

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * S, 2 * S);
  M.topRightCorner(S, S) = -L0;
  M.bottomLeftCorner(S, S) = L1;

  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("linearization eigensolve failed");

  const double band_lo = std::min(std::abs(prm.omega), std::abs(prm.omega + 4.0 * grid.dim()));
  const double band_hi = std::max(std::abs(prm.omega), std::abs(prm.omega + 4.0 * grid.dim()));

  std::vector<DnlsSpectralPair> out(2 * S);
  for (int j = 0; j < 2 * S; ++j) {
    DnlsSpectralPair& pr = out[j];
    const std::complex<double> two_lambda = es.eigenvalues()[j];
    pr.lambda = 0.5 * two_lambda;
    Eigen::VectorXcd v = es.eigenvectors().col(j);
    pr.b_plus = v.head(S);
    pr.b_minus = v.tail(S);

    // K = 4i(<b-,b+> - <b+,b->) = -8 Im sum b- conj(b+)
    const std::complex<double> s = pr.b_minus.dot(pr.b_plus);  // sum conj(b-)*b+
    pr.krein_value = 8.0 * s.imag();  // -8 Im conj(s) = +8 Im s
    const double scale = pr.b_plus.squaredNorm() + pr.b_minus.squaredNorm();
    pr.krein_sign = (std::abs(pr.krein_value) < 1e-8 * scale) ? 0
                    : (pr.krein_value > 0 ? 1 : -1);

    const double re2 = std::abs(two_lambda.real());
    const double im2 = std::abs(two_lambda.imag());
    pr.in_band = re2 <= 1e-3 && im2 >= band_lo - 1e-3 && im2 <= band_hi + 1e-3;

    Eigen::VectorXcd resid = M.cast<std::complex<double>>() * v - two_lambda * v;
    pr.residual = resid.norm() / v.norm();
  }
  for (int j = 0; j < 2 * S; ++j) {
    int c = 0;
    for (int k = 0; k < 2 * S; ++k)
      if (std::abs(out[j].lambda - out[k].lambda) < 1e-6) ++c;
    out[j].cluster_size = c;
  }
  std::sort(out.begin(), out.end(), [](const DnlsSpectralPair& a, const DnlsSpectralPair& b) {
    return std::abs(a.lambda) < std::abs(b.lambda);
  });
  return out;
}

}  // namespace kgl
