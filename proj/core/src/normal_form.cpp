#include "kgl/normal_form.hpp"

#include <cmath>
#include <cstddef>

#include <Eigen/LU>

#include "kgl/field_io.hpp"

namespace kgl::nf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kE = 2.71828182845904523536;

std::complex<double> ipow(std::complex<double> z, int n) {
  std::complex<double> r{1.0, 0.0};
  while (n > 0) {
    if (n & 1) r *= z;
    z *= z;
    n >>= 1;
  }
  return r;
}

}  // namespace

std::string rational_str(const Rational& r) { return r.str(); }

std::string CoefTraits<std::complex<double>>::str(const C& c) {
  if (c.imag() == 0.0) return format_full(c.real());
  return "(" + format_full(c.real()) + "," + format_full(c.imag()) + ")";
}

std::string CoefTraits<RationalComplex>::str(const C& c) {
  if (c.im == 0) return rational_str(c.re);
  return "(" + rational_str(c.re) + "," + rational_str(c.im) + ")";
}

std::complex<double> to_complex(const RationalComplex& c) {
  return {static_cast<double>(c.re), static_cast<double>(c.im)};
}

PolyD to_float(const PolyQ& P) {
  PolyD out;
  for (const auto& [k, v] : P.terms) out.terms.emplace(k, to_complex(v));
  return out;
}

std::string Monomial::str() const {
  if (factors.empty()) return "1";
  std::string out;
  auto append = [&out](const char* base, int site, int exp) {
    if (exp == 0) return;
    if (!out.empty()) out += " ";
    out += base;
    out += "[" + std::to_string(site) + "]";
    if (exp > 1) out += "^" + std::to_string(exp);
  };
  for (const auto& f : factors) {
    append("z", f.site, f.a);
    append("zb", f.site, f.b);
  }
  return out;
}

void NormalFormBudget::validate() const {
  if (order < 1) throw ConfigInvalid("normal-form order must be >= 1");
  if (!(ball_radius > 0.0)) throw ConfigInvalid("normal-form ball radius must be positive");
  if (!(shrink > 0.0) || shrink > 0.25)
    throw ConfigInvalid("normal-form shrink out of range (must be in (0, 1/4])");
  if (eps < 0.0) throw ConfigInvalid("normal-form eps must be nonnegative");
  if (term_cap == 0) throw ConfigInvalid("normal-form term cap must be positive");
}

void NormalFormBudget::fill_scalars(int p, int dim) {
  const double R = ball_radius;
  const int q = 2 * p + 2;
  E = eps * (4.0 * dim * R * R + std::pow(R, q) / q);
  omega1 = 2.0 * eps * (4.0 * dim + std::pow(R, 2 * p));
  phi = 2.0 * kPi * omega1;
  M1 = phi * (kE + 3.0 * order) / shrink;
  M2 = phi * (2.0 * kE + 3.0 * order) / shrink;
  nf_mu = 12.0 * kE * kPi * eps / shrink;
  r_opt = phi > 0.0 ? static_cast<long>(std::floor(shrink / (6.0 * kE * phi))) : 0;
}

void NormalFormBudget::fill_bounds_from_recorded() {
  phi_recorded = f_vnorm.empty() ? 0.0 : 2.0 * kPi * f_vnorm.front();
  M2_recorded = phi_recorded * (2.0 * kE + 3.0 * order) / shrink;
  norm_bound.clear();
  for (int s = 1; s <= order; ++s)
    norm_bound.push_back(2.0 * phi_recorded / shrink * std::pow(M2_recorded, s - 1));
}

std::complex<double> poly_eval(const PolyD& P, const Eigen::VectorXcd& z, double eps) {
  std::complex<double> total{0.0, 0.0};
  for (const auto& [k, c] : P.terms) {
    std::complex<double> prod = c * std::pow(eps, k.first);
    for (const auto& f : k.second.factors)
      prod *= ipow(z[f.site], f.a) * ipow(std::conj(z[f.site]), f.b);
    total += prod;
  }
  return total;
}

namespace {

// per-term gradient accumulation; pick = a-exponent (false) or b-exponent (true)
void accumulate_grad(const PolyD& P, const Eigen::VectorXcd& z, double eps, bool wrt_zbar,
                     Eigen::VectorXcd& out) {
  for (const auto& [k, c] : P.terms) {
    const auto& factors = k.second.factors;
    const std::complex<double> scale = c * std::pow(eps, k.first);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const int exp = wrt_zbar ? factors[i].b : factors[i].a;
      if (exp == 0) continue;
      std::complex<double> prod = scale * double(exp);
      for (std::size_t j = 0; j < factors.size(); ++j) {
        int a = factors[j].a, b = factors[j].b;
        if (j == i) {
          if (wrt_zbar)
            b -= 1;
          else
            a -= 1;
        }
        prod *= ipow(z[factors[j].site], a) * ipow(std::conj(z[factors[j].site]), b);
      }
      out[factors[i].site] += prod;
    }
  }
}

PolyD derivative(const PolyD& P, int site, bool wrt_zbar) {
  PolyD out;
  for (const auto& [k, c] : P.terms) {
    const auto& factors = k.second.factors;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (factors[i].site != site) continue;
      const int exp = wrt_zbar ? factors[i].b : factors[i].a;
      if (exp == 0) continue;
      Monomial m;
      m.factors = factors;
      if (wrt_zbar)
        m.factors[i].b -= 1;
      else
        m.factors[i].a -= 1;
      if (m.factors[i].a == 0 && m.factors[i].b == 0) m.factors.erase(m.factors.begin() + i);
      out.add_term(k.first, m, c * double(exp));
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXcd poly_grad_zbar(const PolyD& P, const Eigen::VectorXcd& z, double eps,
                                int sites) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(sites);
  accumulate_grad(P, z, eps, true, out);
  return out;
}

Eigen::VectorXcd poly_grad_z(const PolyD& P, const Eigen::VectorXcd& z, double eps, int sites) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(sites);
  accumulate_grad(P, z, eps, false, out);
  return out;
}

// ---- generalized stationary profile ----------------------------------------

namespace {

PolyD resonant_tail(const NormalFormResult<std::complex<double>>& R) {
  PolyD tail;
  for (int s = 2; s <= R.order; ++s) tail += R.Z[std::size_t(s) - 1];
  return tail;
}

Eigen::VectorXcd real_point(const RealField& A) {
  const double sqrt2 = std::sqrt(2.0);
  Eigen::VectorXcd zeta(A.values.size());
  for (Eigen::Index j = 0; j < A.values.size(); ++j) zeta[j] = sqrt2 * A.values[j];
  return zeta;
}

}  // namespace

RealField generalized_soliton_residual(const NormalFormResult<std::complex<double>>& R,
                                       const RealField& A, const DnlsParams& prm, double eps) {
  if (!(A.grid == R.grid)) throw ConfigInvalid("profile grid does not match the normal form");
  RealField f = dnls_residual(A, prm);
  if (R.order >= 2) {
    if (!(eps > 0.0)) throw ConfigInvalid("eps must be positive beyond first order");
    PolyD tail = resonant_tail(R);
    Eigen::VectorXcd grad = poly_grad_zbar(tail, real_point(A), eps, A.grid.sites());
    f.values += (std::sqrt(2.0) / eps) * grad.real();
  }
  return f;
}

Eigen::MatrixXd generalized_soliton_jacobian(const NormalFormResult<std::complex<double>>& R,
                                             const RealField& A, const DnlsParams& prm,
                                             double eps) {
  if (!(A.grid == R.grid)) throw ConfigInvalid("profile grid does not match the normal form");
  Eigen::MatrixXd J = dnls_jacobian(A, prm);
  if (R.order >= 2) {
    if (!(eps > 0.0)) throw ConfigInvalid("eps must be positive beyond first order");
    PolyD tail = resonant_tail(R);
    const Eigen::VectorXcd zeta = real_point(A);
    const int n = A.grid.sites();
    for (int j = 0; j < n; ++j) {
      PolyD Pj = derivative(tail, j, true);
      const Eigen::VectorXcd gz = poly_grad_z(Pj, zeta, eps, n);
      const Eigen::VectorXcd gzb = poly_grad_zbar(Pj, zeta, eps, n);
      J.row(j) += (2.0 / eps) * (gz + gzb).real().transpose();
    }
  }
  return J;
}

GeneralizedSoliton solve_generalized_soliton(const NormalFormResult<std::complex<double>>& R,
                                             const SolitonBranch& seed, double eps, double tol,
                                             int max_iter) {
  RealField A = seed.amplitude;
  const DnlsParams& prm = seed.params;
  GeneralizedSoliton out;

  double rnorm = generalized_soliton_residual(R, A, prm, eps).values.norm();
  for (int iter = 0; iter < max_iter; ++iter) {
    if (rnorm <= tol) {
      out.profile = A;
      out.residual_norm = rnorm;
      out.iterations = iter;
      return out;
    }
    const RealField res = generalized_soliton_residual(R, A, prm, eps);
    const Eigen::MatrixXd J = generalized_soliton_jacobian(R, A, prm, eps);
    const Eigen::VectorXd dx = J.partialPivLu().solve(res.values);
    if ((J * dx - res.values).norm() > 1e-8 * std::max(rnorm, 1.0))
      throw SingularJacobian("generalized soliton Jacobian is singular");

    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 12; ++k) {
      RealField trial = A;
      trial.values -= alpha * dx;
      const double tnorm = generalized_soliton_residual(R, trial, prm, eps).values.norm();
      if (tnorm < rnorm || tnorm <= tol) {
        A = std::move(trial);
        rnorm = tnorm;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw NonConvergence("generalized soliton Newton stalled at residual " +
                           format_full(rnorm));
  }
  if (rnorm <= tol) {
    out.profile = A;
    out.residual_norm = rnorm;
    out.iterations = max_iter;
    return out;
  }
  throw NonConvergence("generalized soliton Newton did not reach tolerance, residual " +
                       format_full(rnorm));
}

// ---- state transform --------------------------------------------------------

StateTransform build_state_transform(const LatticeGrid& grid, const std::vector<PolyD>& chi,
                                     int order, int degree_cap, std::size_t term_cap) {
  if (order < 0) throw ConfigInvalid("transform order must be nonnegative");
  const int r = static_cast<int>(chi.size());
  const int dcap = degree_cap > 0 ? degree_cap : (1 << 24);

  StateTransform T;
  T.grid = grid;
  T.order = order;
  T.components.resize(grid.sites());
  for (int j = 0; j < grid.sites(); ++j) {
    std::vector<PolyD> w(std::size_t(order) + 1);
    Monomial m;
    m.factors.push_back({int32_t(j), 1, 0});
    w[0].add_term(0, m, {1.0, 0.0});
    for (int s = 1; s <= order; ++s) {
      for (int l = 1; l <= std::min(s, r); ++l) {
        PolyD br = PolyD::bracket(chi[std::size_t(l) - 1], w[std::size_t(s - l)], dcap, order,
                                  term_cap);
        w[std::size_t(s)] += br.scaled_ratio(l, s);
      }
    }
    PolyD total;
    for (const auto& ws : w) total += ws;
    T.components[std::size_t(j)] = std::move(total);
  }
  return T;
}

Eigen::VectorXcd transform_apply(const StateTransform& T, const Eigen::VectorXcd& z,
                                 double eps) {
  const int n = T.grid.sites();
  if (z.size() != n) throw ConfigInvalid("state size does not match the transform grid");
  Eigen::VectorXcd out(n);
  for (int j = 0; j < n; ++j) out[j] = poly_eval(T.components[std::size_t(j)], z, eps);
  return out;
}

Eigen::VectorXcd transform_invert(const StateTransform& T, const Eigen::VectorXcd& z, double eps,
                                  double tol, int max_iter) {
  const double scale = std::max(1.0, z.norm());
  Eigen::VectorXcd w = z;
  for (int iter = 0; iter < max_iter; ++iter) {
    // T(w) = w + higher order, so iterate w <- z - (T(w) - w)
    Eigen::VectorXcd next = z - (transform_apply(T, w, eps) - w);
    const double delta = (next - w).norm();
    w = std::move(next);
    if (delta <= tol * scale) return w;
  }
  throw NonConvergence("transform inverse fixed point did not settle");
}

Eigen::VectorXcd transform_state(const StateTransform& T, const Eigen::VectorXcd& z,
                                 TransformDirection dir, double eps, double tol) {
  return dir == TransformDirection::Forward ? transform_apply(T, z, eps)
                                            : transform_invert(T, z, eps, tol);
}

// zeta = (u - i v)/sqrt2 rotates by e^{+it} under the harmonic flow
// u(t) = u cos t + v sin t, matching the bracket orientation
Eigen::VectorXcd state_to_zeta(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double inv = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd z(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) z[j] = std::complex<double>(u[j], -v[j]) * inv;
  return z;
}

void zeta_to_state(const Eigen::VectorXcd& z, Eigen::VectorXd& u, Eigen::VectorXd& v) {
  const double s = std::sqrt(2.0);
  u.resize(z.size());
  v.resize(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    u[j] = s * z[j].real();
    v[j] = -s * z[j].imag();
  }
}

TransformedTail transformed_breather_tail(const StateTransform& T, const BreatherSolution& B,
                                          const RealField& gensol, double eps, int mmax,
                                          int samples) {
  if (mmax < 2) throw ConfigInvalid("tail needs at least two harmonics each side");
  if (samples < 4 * mmax) throw ConfigInvalid("too few quadrature samples for the tail");
  const int S = B.grid.sites();

  TransformedTail out;
  out.harmonics.assign(2 * mmax + 1, Eigen::VectorXcd::Zero(S));
  for (int q = 0; q < samples; ++q) {
    const double tau = 2.0 * M_PI * q / samples;
    Eigen::VectorXd u = B.profile_at(tau);
    Eigen::VectorXd v = B.omega * B.profile_derivative_at(tau);
    Eigen::VectorXcd znf = transform_invert(T, state_to_zeta(u, v), eps, 1e-13);
    for (int m = -mmax; m <= mmax; ++m)
      out.harmonics[m + mmax] += znf * (std::polar(1.0, -m * tau) / double(samples));
  }

  Eigen::VectorXcd ref = std::sqrt(2.0) * gensol.values.cast<std::complex<double>>();
  out.first_harmonic_deviation = (out.harmonics[1 + mmax] - ref).norm();
  out.tail = out.first_harmonic_deviation;
  for (int m = -mmax; m <= mmax; ++m)
    if (m != 1) out.tail += out.harmonics[m + mmax].norm();
  return out;
}

}  // namespace kgl::nf
