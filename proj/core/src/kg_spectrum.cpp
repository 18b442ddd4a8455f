#include "kgl/kg_spectrum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kgl/errors.hpp"

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

}  // namespace

std::vector<Eigen::VectorXd> nonlinearity_fourier(const BreatherSolution& B, int kmax) {
  const int S = B.grid.sites();
  const int M = B.harmonic_count();
  const int p = B.params.p;
  // U^{2p} carries harmonics up to 2pM; sampling must resolve those plus the
  // requested projection index without aliasing.
  const int Q = next_pow2(2 * p * M + kmax + 1);

  Eigen::MatrixXd W(S, Q);
  for (int q = 0; q < Q; ++q) {
    Eigen::VectorXd u = B.profile_at(2.0 * M_PI * q / Q);
    for (int n = 0; n < S; ++n) W(n, q) = intpow(u[n], 2 * p);
  }
  std::vector<Eigen::VectorXd> C(kmax + 1);
  for (int k = 0; k <= kmax; ++k) {
    Eigen::VectorXd ck(Q);
    for (int q = 0; q < Q; ++q) ck[q] = std::cos(2.0 * M_PI * k * q / Q);
    C[k] = W * ck / Q;
  }
  return C;
}

HillProblem hill_assemble(const BreatherSolution& B, int M_spec) {
  if (M_spec < 1) throw ConfigInvalid("spectral harmonic count must be >= 1");
  const int S = B.grid.sites();
  const int K = (2 * M_spec + 1) * S;
  if (2.0 * K > 20000.0)
    throw DimensionOverflow("companion dimension " + std::to_string(2 * K) +
                            " exceeds the dense eigensolver budget");

  HillProblem prob;
  prob.grid = B.grid;
  prob.M_spec = M_spec;
  prob.omega = B.omega;
  prob.omega_param = B.params.omega;
  prob.eps = B.eps;
  prob.p = B.params.p;

  const auto C = nonlinearity_fourier(B, 2 * M_spec);
  const Eigen::MatrixXd lapM = laplacian_matrix(B.grid);
  const double c = B.eps * (1 + 2 * B.params.p);

  // sigma^2 B = D0 B - 2 omega sigma Mhat B with
  // (D0 B)^m = (1 - m^2 w^2) B^m - eps Lap B^m + eps(1+2p) sum_k C^(|m-k|) B^k
  prob.D0 = Eigen::MatrixXd::Zero(K, K);
  for (int mi = -M_spec; mi <= M_spec; ++mi) {
    const int bi = (mi + M_spec) * S;
    for (int mj = -M_spec; mj <= M_spec; ++mj) {
      const int bj = (mj + M_spec) * S;
      const int k = std::abs(mi - mj);
      prob.D0.block(bi, bj, S, S).diagonal() += c * C[k];
    }
    prob.D0.block(bi, bi, S, S) +=
        (1.0 - double(mi) * mi * B.omega * B.omega) * Eigen::MatrixXd::Identity(S, S) -
        B.eps * lapM;
  }

  prob.companion = Eigen::MatrixXd::Zero(2 * K, 2 * K);
  prob.companion.topRightCorner(K, K).setIdentity();
  prob.companion.bottomLeftCorner(K, K) = prob.D0;
  for (int mi = -M_spec; mi <= M_spec; ++mi) {
    const int bi = (mi + M_spec) * S;
    prob.companion.block(K + bi, K + bi, S, S).diagonal().setConstant(-2.0 * B.omega * mi);
  }
  return prob;
}

std::vector<std::complex<double>> hill_exponents(const HillProblem& prob) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(prob.companion, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("companion eigensolve failed");
  std::vector<std::complex<double>> out(es.eigenvalues().size());
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    out[j] = std::complex<double>(0.0, 1.0) * es.eigenvalues()[j];
  return out;
}

std::vector<KgSpectralPair> eigen_near_zero(const HillProblem& prob, int count) {
  const int K = static_cast<int>(prob.D0.rows());
  const int S = prob.grid.sites();
  const int Ms = prob.M_spec;

  Eigen::EigenSolver<Eigen::MatrixXd> es(prob.companion);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("companion eigensolve failed");

  std::vector<int> order(2 * K);
  for (int j = 0; j < 2 * K; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
  });
  count = std::min(count, 2 * K);

  const double band_lo = std::min(std::abs(prob.omega_param),
                                  std::abs(prob.omega_param + 4.0 * prob.grid.dim()));
  const double band_hi = std::max(std::abs(prob.omega_param),
                                  std::abs(prob.omega_param + 4.0 * prob.grid.dim()));

  std::vector<KgSpectralPair> out;
  out.reserve(count);
  for (int jj = 0; jj < count; ++jj) {
    const int j = order[jj];
    const std::complex<double> sigma = es.eigenvalues()[j];
    KgSpectralPair pr;
    pr.lambda = std::complex<double>(0.0, 1.0) * sigma;
    Eigen::VectorXcd v = es.eigenvectors().col(j).head(K);
    const double vn = v.norm();
    if (vn > 0) v /= vn;
    pr.harmonics.resize(2 * Ms + 1);
    pr.krein = 0.0;
    for (int m = -Ms; m <= Ms; ++m) {
      pr.harmonics[m + Ms] = v.segment((m + Ms) * S, S);
      pr.krein += (2.0 * prob.omega * m + 2.0 * pr.lambda.imag()) *
                  pr.harmonics[m + Ms].squaredNorm();
    }
    pr.floquet = std::exp(2.0 * M_PI * pr.lambda / prob.omega);

    // pencil residual: D0 v - 2 w sigma Mhat v - sigma^2 v, with ||v|| = 1
    Eigen::VectorXcd resid = prob.D0.cast<std::complex<double>>() * v;
    for (int m = -Ms; m <= Ms; ++m)
      resid.segment((m + Ms) * S, S) -=
          2.0 * prob.omega * double(m) * sigma * pr.harmonics[m + Ms];
    resid -= sigma * sigma * v;
    pr.residual = resid.norm();

    if (prob.eps > 0) {
      const std::complex<double> z = 2.0 * pr.lambda / prob.eps;
      const double iz = std::abs(z.imag());
      const double gap = std::max({0.0, band_lo - iz, iz - band_hi});
      pr.near_band = std::hypot(z.real(), gap) < 1e-3;
    }

    out.push_back(std::move(pr));
  }
  return out;
}

std::vector<std::complex<double>> hill_multipliers(const HillProblem& prob) {
  std::vector<std::complex<double>> mult;
  for (const auto& lam : hill_exponents(prob)) {
    const double im = lam.imag();
    if (im > -prob.omega / 2 && im <= prob.omega / 2)
      mult.push_back(std::exp(2.0 * M_PI * lam / prob.omega));
  }
  return mult;
}

Eigen::MatrixXd monodromy_matrix(const BreatherSolution& B, int nsteps) {
  const int S = B.grid.sites();
  const double T = B.period();
  const double h = T / nsteps;
  const double c = B.eps * (1 + 2 * B.params.p);
  const int p = B.params.p;

  // state (W, Y), each S x 2S;  W' = Y,  Y' = -W - c U^{2p} W + eps Lap W
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(S, 2 * S).eval();
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(S, 2 * S);
  W.rightCols(S).setZero();
  Y.rightCols(S).setIdentity();

  Eigen::MatrixXd lapM = laplacian_matrix(B.grid);
  Eigen::MatrixXd linop = B.eps * lapM - Eigen::MatrixXd::Identity(S, S);

  auto rhsY = [&](double t, const Eigen::MatrixXd& Win, Eigen::MatrixXd& out) {
    Eigen::VectorXd u = B.profile_at(B.omega * t);
    Eigen::VectorXd diag(S);
    for (int n = 0; n < S; ++n) diag[n] = c * intpow(u[n], 2 * p);
    out.noalias() = linop * Win;
    out -= diag.asDiagonal() * Win;
  };

  Eigen::MatrixXd k1w, k2w, k3w, k4w, k1y(S, 2 * S), k2y(S, 2 * S), k3y(S, 2 * S),
      k4y(S, 2 * S);
  for (int step = 0; step < nsteps; ++step) {
    const double t = step * h;
    k1w = Y;
    rhsY(t, W, k1y);
    k2w = Y + 0.5 * h * k1y;
    rhsY(t + 0.5 * h, W + 0.5 * h * k1w, k2y);
    k3w = Y + 0.5 * h * k2y;
    rhsY(t + 0.5 * h, W + 0.5 * h * k2w, k3y);
    k4w = Y + h * k3y;
    rhsY(t + h, W + h * k3w, k4y);
    W += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    Y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
  }

  Eigen::MatrixXd M(2 * S, 2 * S);
  M.topRows(S) = W;
  M.bottomRows(S) = Y;
  return M;
}

std::vector<std::complex<double>> monodromy_multipliers(const BreatherSolution& B, int nsteps) {
  Eigen::MatrixXd M = monodromy_matrix(B, nsteps);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("monodromy eigensolve failed");
  std::vector<std::complex<double>> out(es.eigenvalues().size());
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) out[j] = es.eigenvalues()[j];
  return out;
}

}  // namespace kgl
