#include "kgl/breather.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "kgl/errors.hpp"
#include "kgl/fit.hpp"
#include "kgl/rng.hpp"

namespace kgl {

namespace {

double intpow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

int next_pow2(int n) {
  int q = 1;
  while (q < n) q *= 2;
  return q;
}

// Collocation workspace: node count chosen so products up to degree 2p+2 in
// the harmonics alias to nothing the projections see.
struct Quadrature {
  int Q;
  Eigen::MatrixXd cos_table;  // (M+1) x Q, cos(m tau_q)

  Quadrature(int M, int p) {
    Q = next_pow2((2 * p + 2) * M + 1);
    cos_table.resize(M + 1, Q);
    for (int m = 0; m <= M; ++m)
      for (int q = 0; q < Q; ++q) cos_table(m, q) = std::cos(2.0 * M_PI * m * q / Q);
  }

  // U(n, q) = A0 + 2 sum_m A^m cos(m tau_q)
  Eigen::MatrixXd sample(const std::vector<Eigen::VectorXd>& A) const {
    const int S = static_cast<int>(A[0].size());
    const int M = static_cast<int>(A.size()) - 1;
    Eigen::MatrixXd U = A[0] * Eigen::RowVectorXd::Ones(Q);
    for (int m = 1; m <= M; ++m) U.noalias() += 2.0 * A[m] * cos_table.row(m);
    (void)S;
    return U;
  }
};

}  // namespace

double BreatherSolution::period() const { return 2.0 * M_PI / omega; }

Eigen::VectorXd BreatherSolution::profile_at(double tau) const {
  Eigen::VectorXd u = harmonics[0];
  for (int m = 1; m < static_cast<int>(harmonics.size()); ++m)
    u += 2.0 * std::cos(m * tau) * harmonics[m];
  return u;
}

Eigen::VectorXd BreatherSolution::profile_derivative_at(double tau) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(harmonics[0].size());
  for (int m = 1; m < static_cast<int>(harmonics.size()); ++m)
    u -= 2.0 * m * std::sin(m * tau) * harmonics[m];
  return u;
}

PhaseState BreatherSolution::initial_state() const {
  PhaseState s(grid);
  s.u.values = profile_at(0.0);
  s.v.values = omega * profile_derivative_at(0.0);
  return s;
}

double BreatherSolution::tail_ratio() const {
  const int M = harmonic_count();
  const double head = harmonics[1].norm();
  if (head == 0.0) return 0.0;
  return harmonics[M].norm() / head;
}

BreatherSolution seed_from_soliton(const SolitonBranch& branch, double eps, int M) {
  if (M < 3) throw ConfigInvalid("breather needs at least 3 harmonics");
  if (eps < 0) throw ConfigInvalid("eps must be nonnegative");
  const double om2 = 1.0 - eps * branch.params.omega;
  if (om2 <= 0)
    throw InvalidFrequency("1 - eps*Omega = " + std::to_string(om2) + " is not positive");
  BreatherSolution B;
  B.grid = branch.amplitude.grid;
  B.harmonics.assign(M + 1, Eigen::VectorXd::Zero(B.grid.sites()));
  B.harmonics[1] = branch.amplitude.values;
  B.omega = std::sqrt(om2);
  B.eps = eps;
  B.params = branch.params;
  return B;
}

std::vector<Eigen::VectorXd> breather_residual(const BreatherSolution& B) {
  const int M = B.harmonic_count();
  const int S = B.grid.sites();
  const int p = B.params.p;
  Quadrature quad(M, p);

  Eigen::MatrixXd U = quad.sample(B.harmonics);
  Eigen::MatrixXd F(S, quad.Q);
  for (int n = 0; n < S; ++n)
    for (int q = 0; q < quad.Q; ++q) F(n, q) = intpow(U(n, q), 1 + 2 * p);

  std::vector<Eigen::VectorXd> res(M + 1);
  Eigen::VectorXd lap(S);
  for (int m = 0; m <= M; ++m) {
    Eigen::VectorXd proj = F * quad.cos_table.row(m).transpose() / quad.Q;
    laplacian_into(RealField(B.grid, B.harmonics[m]), lap);
    const double lin = 1.0 - double(m) * m * B.omega * B.omega;
    res[m] = lin * B.harmonics[m] + B.eps * proj - B.eps * lap;
  }
  return res;
}

double breather_residual_norm(const BreatherSolution& B) {
  double s = 0.0;
  for (const auto& r : breather_residual(B)) s += r.squaredNorm();
  return std::sqrt(s);
}

Eigen::MatrixXd breather_jacobian(const BreatherSolution& B) {
  const int M = B.harmonic_count();
  const int S = B.grid.sites();
  const int p = B.params.p;
  Quadrature quad(M, p);

  Eigen::MatrixXd U = quad.sample(B.harmonics);
  Eigen::MatrixXd W(S, quad.Q);
  for (int n = 0; n < S; ++n)
    for (int q = 0; q < quad.Q; ++q) W(n, q) = intpow(U(n, q), 2 * p);

  Eigen::MatrixXd lapM = laplacian_matrix(B.grid);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero((M + 1) * S, (M + 1) * S);
  const double c = (1 + 2 * p) * B.eps;

  for (int m = 0; m <= M; ++m) {
    for (int mp = 0; mp <= M; ++mp) {
      // chain rule through the collocation values: c_0 = 1, c_m = 2 cos
      Eigen::VectorXd weight = (quad.cos_table.row(m).array() * quad.cos_table.row(mp).array())
                                   .matrix()
                                   .transpose() *
                               ((mp == 0 ? 1.0 : 2.0) / quad.Q);
      Eigen::VectorXd diag = W * weight;
      J.block(m * S, mp * S, S, S).diagonal() = c * diag;
    }
    const double lin = 1.0 - double(m) * m * B.omega * B.omega;
    J.block(m * S, m * S, S, S) += lin * Eigen::MatrixXd::Identity(S, S) - B.eps * lapM;
  }
  return J;
}

namespace {

BreatherSolution newton_breather(BreatherSolution B, double tol, int max_iter) {
  const int M = B.harmonic_count();
  const int S = B.grid.sites();

  auto pack = [&](const std::vector<Eigen::VectorXd>& vs) {
    Eigen::VectorXd x((M + 1) * S);
    for (int m = 0; m <= M; ++m) x.segment(m * S, S) = vs[m];
    return x;
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    for (int m = 0; m <= M; ++m) B.harmonics[m] = x.segment(m * S, S);
  };

  Eigen::VectorXd x = pack(B.harmonics);
  Eigen::VectorXd res = pack(breather_residual(B));
  double rnorm = res.norm();
  for (int it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) {
      B.residual_norm = rnorm;
      B.newton_iterations = it;
      return B;
    }
    Eigen::MatrixXd J = breather_jacobian(B);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd dx = lu.solve(res);
    if (!dx.allFinite() || (J * dx - res).norm() > 1e-6 * std::max(rnorm, 1.0))
      throw SingularJacobian("breather linear solve failed");
    double damp = 1.0;
    for (int k = 0;; ++k) {
      Eigen::VectorXd trial = x - damp * dx;
      unpack(trial);
      Eigen::VectorXd tres = pack(breather_residual(B));
      const double tnorm = tres.norm();
      if (tnorm < rnorm || tnorm <= tol) {
        x = trial;
        res = tres;
        rnorm = tnorm;
        break;
      }
      if (k >= 11) throw NonConvergence("breather Newton stalled at " + std::to_string(rnorm));
      damp *= 0.5;
    }
  }
  if (rnorm <= tol) {
    B.residual_norm = rnorm;
    B.newton_iterations = max_iter;
    return B;
  }
  throw NonConvergence("breather Newton hit the iteration cap at " + std::to_string(rnorm));
}

}  // namespace

BreatherSolution solve_breather(const BreatherSolution& seed, double tol, BreatherMode mode,
                                int max_iter) {
  BreatherSolution B = seed;
  if (mode == BreatherMode::FixFrequencyParam) {
    const double om2 = 1.0 - B.eps * B.params.omega;
    if (om2 <= 0) throw InvalidFrequency("1 - eps*Omega must be positive");
    B.omega = std::sqrt(om2);
  }
  for (int attempt = 0; attempt < 3; ++attempt) {
    B = newton_breather(B, tol, max_iter);
    if (B.harmonic_count() >= 1 && B.tail_ratio() < 1e-3) return B;
    // tail not resolved: double the harmonic count and resolve
    const int M2 = 2 * B.harmonic_count();
    B.harmonics.resize(M2 + 1, Eigen::VectorXd::Zero(B.grid.sites()));
  }
  throw NonConvergence("harmonic tail not resolved after doubling to M = " +
                       std::to_string(seed.harmonic_count() * 4));
}

BoundReport verify_bounds(const SolitonBranch& branch, const std::vector<double>& eps_list,
                          double tol, int M) {
  if (eps_list.size() < 2) throw ConfigInvalid("bound sweep needs at least two eps values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0 || eps_list[i] >= 0.1)
      throw ConfigInvalid("bound sweep eps must lie in (0, 0.1)");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw ConfigInvalid("bound sweep eps must decrease strictly");
  }
  if (M == 0) M = 2 * branch.params.p + 6;

  BoundReport rep;
  rep.eps_list = eps_list;
  const double Om = branch.params.omega;
  for (double eps : eps_list) {
    try {
      BreatherSolution B = solve_breather(seed_from_soliton(branch, eps, M), tol);
      rep.omega_err.push_back(std::abs(B.omega - 1.0 + eps * Om / 2.0));
      rep.profile_err.push_back((B.harmonics[1] - branch.amplitude.values).norm());
      double tail = B.harmonics[0].norm();
      for (int m = 2; m <= B.harmonic_count(); ++m) tail += B.harmonics[m].norm();
      rep.tail_err.push_back(tail);
      rep.converged.push_back(true);
    } catch (const Error&) {
      rep.omega_err.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.profile_err.push_back(rep.omega_err.back());
      rep.tail_err.push_back(rep.omega_err.back());
      rep.converged.push_back(false);
    }
  }

  std::vector<double> xs, yo, yp, yt;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!rep.converged[i]) continue;
    xs.push_back(eps_list[i]);
    yo.push_back(rep.omega_err[i]);
    yp.push_back(rep.profile_err[i]);
    yt.push_back(rep.tail_err[i]);
  }
  if (xs.size() >= 2) {
    rep.omega_slope = loglog_slope(xs, yo);
    rep.profile_slope = loglog_slope(xs, yp);
    rep.tail_slope = loglog_slope(xs, yt);
  } else {
    rep.omega_slope = rep.profile_slope = rep.tail_slope =
        std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double time_domain_check(const BreatherSolution& B, double h_over_T) {
  if (h_over_T <= 0 || h_over_T > 0.5) throw ConfigInvalid("h_over_T out of range");
  PhaseState s = B.initial_state();
  const Eigen::VectorXd u0 = s.u.values, v0 = s.v.values;
  const double norm0 = std::sqrt(u0.squaredNorm() + v0.squaredNorm());
  if (norm0 == 0) throw ConfigInvalid("empty breather");
  const int64_t n = std::llround(1.0 / h_over_T);
  const double h = B.period() / static_cast<double>(n);
  integrate(s, B.eps, B.params.p, h, n, /*fourth_order=*/true);
  const double err = std::sqrt((s.u.values - u0).squaredNorm() + (s.v.values - v0).squaredNorm());
  return err / norm0;
}

StabilityTrace orbital_stability_run(const BreatherSolution& B, double delta, double T_final,
                                     double h, uint64_t seed, int sample_count,
                                     int phase_samples) {
  if (h <= 0 || T_final <= h) throw ConfigInvalid("bad stability run horizon");
  const int S = B.grid.sites();

  // reference loop, sampled uniformly in phase
  Eigen::MatrixXd loop_u(S, phase_samples), loop_v(S, phase_samples);
  for (int k = 0; k < phase_samples; ++k) {
    const double tau = 2.0 * M_PI * k / phase_samples;
    loop_u.col(k) = B.profile_at(tau);
    loop_v.col(k) = B.omega * B.profile_derivative_at(tau);
  }

  PhaseState s = B.initial_state();
  if (delta > 0) {
    GaussianRng rng(seed);
    Eigen::VectorXd g(2 * S);
    for (int i = 0; i < 2 * S; ++i) g[i] = rng.gauss();
    g *= delta / g.norm();
    s.u.values += g.head(S);
    s.v.values += g.tail(S);
  }

  auto loop_distance = [&](const PhaseState& st) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < phase_samples; ++k) {
      const double d2 = (st.u.values - loop_u.col(k)).squaredNorm() +
                        (st.v.values - loop_v.col(k)).squaredNorm();
      if (d2 < best) best = d2;
    }
    return std::sqrt(best);
  };

  const int64_t total_steps = std::llround(T_final / h);
  const int64_t stride = std::max<int64_t>(1, total_steps / std::max(1, sample_count));

  StabilityTrace tr;
  tr.seed = seed;
  tr.delta = delta;
  const int p = B.params.p;
  tr.times.push_back(s.time);
  tr.H_values.push_back(hamiltonian(s, B.eps, p));
  tr.G_values.push_back(almost_invariant(s));
  tr.orbital_distance.push_back(loop_distance(s));
  for (int64_t done = 0; done < total_steps;) {
    const int64_t chunk = std::min(stride, total_steps - done);
    integrate(s, B.eps, p, h, chunk);
    done += chunk;
    tr.times.push_back(s.time);
    tr.H_values.push_back(hamiltonian(s, B.eps, p));
    tr.G_values.push_back(almost_invariant(s));
    tr.orbital_distance.push_back(loop_distance(s));
  }
  return tr;
}

}  // namespace kgl
