#include "kgl/stability.hpp"

#include <algorithm>
#include <cmath>

#include "kgl/errors.hpp"
#include "kgl/fit.hpp"

namespace kgl {

DnlsSpectralPair pick_reference_eigenvalue(const std::vector<DnlsSpectralPair>& spectrum) {
  const DnlsSpectralPair* best = nullptr;
  for (const auto& pr : spectrum) {
    if (pr.in_band || pr.krein_sign == 0 || pr.cluster_size > 1) continue;
    if (std::abs(pr.lambda.real()) > 1e-8 || pr.lambda.imag() <= 1e-6) continue;
    if (!best || std::abs(pr.lambda.imag()) < std::abs(best->lambda.imag())) best = &pr;
  }
  if (!best)
    throw ConfigInvalid(
        "no simple isolated off-band imaginary eigenvalue with nonzero Krein sign");
  return *best;
}

namespace {

// least-squares complex scalar aligning x to y: argmin_c ||c x - y||
std::complex<double> align_scalar(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
  const double nx = x.squaredNorm();
  if (nx == 0) return {1.0, 0.0};
  return x.dot(y) / nx;  // <x,y> / <x,x> with Eigen's conjugate-first dot
}

}  // namespace

SpectralScalingReport verify_spectral_bounds(const SolitonBranch& branch,
                                             const DnlsSpectralPair& target,
                                             const std::vector<double>& eps_list,
                                             int M_breather, int M_spec, double tol) {
  if (target.in_band) throw ConfigInvalid("reference eigenvalue lies in the band");
  if (target.cluster_size > 1) throw ConfigInvalid("reference eigenvalue is not simple");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0) throw ConfigInvalid("eps must be positive");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw ConfigInvalid("eps sweep must decrease strictly");
  }

  SpectralScalingReport rep;
  rep.eps_list = eps_list;
  rep.reference = target;
  const std::complex<double> Lambda = target.lambda;
  const int S = branch.amplitude.grid.sites();

  // dNLS eigenvector in KG Fourier variables: B^(+1) ~ b+ + i b-, B^(-1) ~ b+ - i b-
  const Eigen::VectorXcd limit_plus = target.b_plus + std::complex<double>(0, 1) * target.b_minus;
  const Eigen::VectorXcd limit_minus = target.b_plus - std::complex<double>(0, 1) * target.b_minus;

  std::complex<double> prev_lambda;
  double prev_eps = 0.0;
  int first_sign = 0;

  for (double eps : eps_list) {
    BreatherSolution B = solve_breather(seed_from_soliton(branch, eps, M_breather), tol);
    HillProblem prob = hill_assemble(B, M_spec);
    const int count = std::min(40, 2 * (2 * M_spec + 1) * S);
    std::vector<KgSpectralPair> pairs = eigen_near_zero(prob, count);

    const std::complex<double> predicted = eps * Lambda;
    std::sort(pairs.begin(), pairs.end(), [&](const KgSpectralPair& a, const KgSpectralPair& b) {
      return std::abs(a.lambda - predicted) < std::abs(b.lambda - predicted);
    });
    if (pairs.size() < 2) throw EigenSolverFailure("too few exponents near zero");
    const double d0 = std::abs(pairs[0].lambda - predicted);
    const double d1 = std::abs(pairs[1].lambda - predicted);
    if (d1 - d0 < 1e-3 * eps)
      throw MatchAmbiguity("two exponents within 1e-3*eps of the prediction at eps = " +
                           std::to_string(eps));
    const KgSpectralPair& hit = pairs[0];

    if (prev_eps > 0) {
      const double jump = std::abs(hit.lambda - prev_lambda);
      const double allowed = 5.0 * std::abs(Lambda) * (prev_eps - eps);
      if (jump > allowed)
        throw MatchAmbiguity("continued exponent jumped by " + std::to_string(jump) +
                             " > " + std::to_string(allowed) + " at eps = " + std::to_string(eps));
    }
    prev_lambda = hit.lambda;
    prev_eps = eps;

    rep.lambda_list.push_back(hit.lambda);
    rep.lambda_err.push_back(std::abs(hit.lambda - predicted));
    rep.re_lambda.push_back(std::abs(hit.lambda.real()));
    rep.krein_list.push_back(hit.krein);

    const int Ms = prob.M_spec;
    Eigen::VectorXcd stacked(2 * S);
    stacked.head(S) = hit.harmonics[1 + Ms];
    stacked.tail(S) = hit.harmonics[-1 + Ms];
    Eigen::VectorXcd limit_stacked(2 * S);
    limit_stacked.head(S) = limit_plus;
    limit_stacked.tail(S) = limit_minus;
    const std::complex<double> c = align_scalar(stacked, limit_stacked);

    double verr = (c * hit.harmonics[1 + Ms] - limit_plus).norm() +
                  (c * hit.harmonics[-1 + Ms] - limit_minus).norm();
    for (int m = -Ms; m <= Ms; ++m) {
      if (m == 1 || m == -1) continue;
      verr += std::abs(c) * hit.harmonics[m + Ms].norm();
    }
    rep.vector_err.push_back(verr);

    const int sign = hit.krein > 0 ? 1 : (hit.krein < 0 ? -1 : 0);
    if (first_sign == 0)
      first_sign = sign;
    else if (sign != first_sign)
      rep.krein_sign_constant = false;
  }

  rep.max_re_lambda = 0.0;
  for (double r : rep.re_lambda) rep.max_re_lambda = std::max(rep.max_re_lambda, r);
  if (rep.eps_list.size() >= 2) {
    rep.lambda_slope = loglog_slope(rep.eps_list, rep.lambda_err);
    rep.vector_slope = loglog_slope(rep.eps_list, rep.vector_err);
  }
  return rep;
}

}  // namespace kgl
