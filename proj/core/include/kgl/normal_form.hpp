#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>

#include "kgl/breather.hpp"
#include "kgl/dnls.hpp"
#include "kgl/errors.hpp"
#include "kgl/lattice.hpp"

namespace kgl::nf {

using Rational = boost::multiprecision::cpp_rational;

// Exact complex rationals for the symbolic mode.
struct RationalComplex {
  Rational re, im;

  RationalComplex() = default;
  RationalComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
  explicit RationalComplex(long r) : re(r), im(0) {}

  friend RationalComplex operator+(const RationalComplex& a, const RationalComplex& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend RationalComplex operator-(const RationalComplex& a, const RationalComplex& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend RationalComplex operator-(const RationalComplex& a) { return {-a.re, -a.im}; }
  friend RationalComplex operator*(const RationalComplex& a, const RationalComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const RationalComplex& a, const RationalComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
};

std::string rational_str(const Rational& r);

// One factor zeta_site^a * zetabar_site^b;  a monomial is a sorted factor list.
struct Monomial {
  struct Factor {
    int32_t site;
    int32_t a;
    int32_t b;
    friend bool operator==(const Factor& x, const Factor& y) {
      return x.site == y.site && x.a == y.a && x.b == y.b;
    }
    friend bool operator<(const Factor& x, const Factor& y) {
      if (x.site != y.site) return x.site < y.site;
      if (x.a != y.a) return x.a < y.a;
      return x.b < y.b;
    }
  };
  std::vector<Factor> factors;

  int degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.a + f.b;
    return d;
  }
  // weight of the monomial under the phase rotation; 0 = resonant
  int weight() const {
    int w = 0;
    for (const auto& f : factors) w += f.a - f.b;
    return w;
  }
  Monomial conjugated() const {
    Monomial m = *this;
    for (auto& f : m.factors) std::swap(f.a, f.b);
    return m;
  }
  std::string str() const;

  friend bool operator==(const Monomial& x, const Monomial& y) { return x.factors == y.factors; }
  friend bool operator<(const Monomial& x, const Monomial& y) { return x.factors < y.factors; }
};

template <class C>
struct CoefTraits;

template <>
struct CoefTraits<std::complex<double>> {
  using C = std::complex<double>;
  static bool is_zero(const C& c) { return c.real() == 0.0 && c.imag() == 0.0; }
  static C i_times(const C& c) { return {-c.imag(), c.real()}; }
  static C conj(const C& c) { return std::conj(c); }
  static C ratio(long num, long den) { return {double(num) / double(den), 0.0}; }
  static C integer(long n) { return {double(n), 0.0}; }
  static double abs_value(const C& c) { return std::abs(c); }
  static bool is_real(const C& c) { return c.imag() == 0.0; }
  static std::string str(const C& c);
};

template <>
struct CoefTraits<RationalComplex> {
  using C = RationalComplex;
  static bool is_zero(const C& c) { return c.re == 0 && c.im == 0; }
  static C i_times(const C& c) { return {-c.im, c.re}; }
  static C conj(const C& c) { return {c.re, -c.im}; }
  // cpp_rational(n, d) rejects d < 0 outright, so normalize the sign here
  static C ratio(long num, long den) {
    if (den < 0) num = -num, den = -den;
    return {Rational(num, den), Rational(0)};
  }
  static C integer(long n) { return C(n); }
  static double abs_value(const C& c) {
    const double re = static_cast<double>(c.re), im = static_cast<double>(c.im);
    return std::sqrt(re * re + im * im);
  }
  static bool is_real(const C& c) { return c.im == 0; }
  static std::string str(const C& c);
};

std::complex<double> to_complex(const RationalComplex& c);

// Polynomial in zeta/zetabar with an integer coupling-order grading: the key
// (s, monomial) carries the coefficient of eps^s * monomial.
template <class C>
struct Poly {
  using Traits = CoefTraits<C>;
  using Key = std::pair<int, Monomial>;
  std::map<Key, C> terms;

  std::size_t size() const { return terms.size(); }
  bool empty() const { return terms.empty(); }

  void add_term(int order, const Monomial& m, const C& c) {
    if (Traits::is_zero(c)) return;
    auto it = terms.find({order, m});
    if (it == terms.end()) {
      terms.emplace(Key{order, m}, c);
    } else {
      it->second = it->second + c;
      if (Traits::is_zero(it->second)) terms.erase(it);
    }
  }

  Poly& operator+=(const Poly& o) {
    for (const auto& [k, c] : o.terms) add_term(k.first, k.second, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    for (const auto& [k, c] : o.terms) add_term(k.first, k.second, -c);
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }

  Poly scaled(const C& c) const {
    Poly out;
    if (Traits::is_zero(c)) return out;
    for (const auto& [k, v] : terms) out.terms.emplace(k, v * c);
    return out;
  }
  Poly scaled_ratio(long num, long den) const { return scaled(Traits::ratio(num, den)); }

  Poly conjugate() const {
    Poly out;
    for (const auto& [k, v] : terms) out.add_term(k.first, k.second.conjugated(), Traits::conj(v));
    return out;
  }

  // real function of the phase-space point: coef(a,b) = conj(coef(b,a))
  bool reality_ok() const {
    for (const auto& [k, v] : terms) {
      auto it = terms.find({k.first, k.second.conjugated()});
      if (it == terms.end()) return false;
      if (!Traits::is_zero(it->second - Traits::conj(v))) return false;
    }
    return true;
  }

  Poly resonant_part() const {
    Poly out;
    for (const auto& [k, v] : terms)
      if (k.second.weight() == 0) out.terms.emplace(k, v);
    return out;
  }
  Poly nonresonant_part() const {
    Poly out;
    for (const auto& [k, v] : terms)
      if (k.second.weight() != 0) out.terms.emplace(k, v);
    return out;
  }

  int max_degree() const {
    int d = 0;
    for (const auto& [k, v] : terms) d = std::max(d, k.second.degree());
    return d;
  }
  int max_order() const {
    int s = 0;
    for (const auto& [k, v] : terms) s = std::max(s, k.first);
    return s;
  }

  // sum |coef| * radius^degree * eps^order, an upper bound for the supremum
  // over the polydisc |zeta_j| <= radius
  double l1_norm(double radius, double eps) const {
    double n = 0.0;
    for (const auto& [k, v] : terms)
      n += Traits::abs_value(v) * std::pow(radius, k.second.degree()) * std::pow(eps, k.first);
    return n;
  }
  // same bound for the l1 size of the gradient (vector-field scale)
  double l1_vector_norm(double radius, double eps) const {
    double n = 0.0;
    for (const auto& [k, v] : terms)
      n += Traits::abs_value(v) * k.second.degree() *
           std::pow(radius, k.second.degree() - 1) * std::pow(eps, k.first);
    return n;
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : terms)
      out += "s=" + std::to_string(k.first) + "  " + k.second.str() + "  " +
             Traits::str(v) + "\n";
    return out;
  }

  // {f, g} = i sum_j (f_zetabar_j g_zeta_j - f_zeta_j g_zetabar_j), the
  // bracket carried over from {u_j, v_j} pairs by zeta = (u - i v)/sqrt2, so
  // that {G, m} = i w(m) m and the G-flow rotates zeta_j -> zeta_j e^{it}.
  // Terms with degree above degree_cap or order above order_cap are
  // truncated away.
  static Poly bracket(const Poly& f, const Poly& g, int degree_cap, int order_cap,
                      std::size_t term_cap);
};

// Exact bracket; with degree_cap > 0 a result term above the cap throws
// DegreeOverflow instead of being dropped.
template <class C>
Poly<C> poisson(const Poly<C>& f, const Poly<C>& g, int degree_cap = 0);

// evaluation at a phase-space point (zetabar = conj(zeta))
std::complex<double> poly_eval(const Poly<std::complex<double>>& P, const Eigen::VectorXcd& z,
                               double eps);
// d/d zetabar_j for all j (gradient used by vector fields and stationarity)
Eigen::VectorXcd poly_grad_zbar(const Poly<std::complex<double>>& P, const Eigen::VectorXcd& z,
                                double eps, int sites);
Eigen::VectorXcd poly_grad_z(const Poly<std::complex<double>>& P, const Eigen::VectorXcd& z,
                             double eps, int sites);

using PolyQ = Poly<RationalComplex>;
using PolyD = Poly<std::complex<double>>;

PolyD to_float(const PolyQ& P);

// ---- model construction ---------------------------------------------------

// G = sum_j zeta_j zetabar_j, the harmonic action (order 0).
template <class C>
Poly<C> harmonic_action(const LatticeGrid& grid);

// Order-1 interaction: per-site u^{2p+2}/(2p+2) plus once-per-bond coupling
// (u_j - u_h)^2 / 2 with u = (zeta + zetabar)/sqrt2, including Dirichlet
// ghost bonds.  Exact binomial coefficients in either coefficient type.
template <class C>
Poly<C> scaled_interaction(const LatticeGrid& grid, int p, int degree_cap);

template <class C>
Poly<C> build_scaled_hamiltonian(const LatticeGrid& grid, int p, int degree_cap);

// ---- homological step ------------------------------------------------------

// Solves {G, chi} + Z = Psi termwise: Z = resonant part, chi coefficient
// c/(iw) on each nonresonant term of weight w (equivalently the averaging
// integral (1/2pi) int t (Psi - Z) o Phi_G^t dt along the e^{it} rotation).
template <class C>
std::pair<Poly<C>, Poly<C>> solve_homological(const Poly<C>& Psi);

// ---- normal form driver ----------------------------------------------------

struct NormalFormBudget {
  int order = 3;
  double ball_radius = 0.25;  // R, measured in the (u,v) l2 norm
  double shrink = 0.25;       // frak-d in (0, 1/4]
  double eps = 0.0;
  int degree_cap = 0;              // 0: derived from p and order
  std::size_t term_cap = 4000000;  // memory guard -> OrderOverflow

  // a-priori scalars from the small-coupling estimates
  double E = 0.0, omega1 = 0.0, phi = 0.0;
  double M1 = 0.0, M2 = 0.0, nf_mu = 0.0;
  long r_opt = 0;

  // Deterministic l1 coefficient diagnostics per order s = 1..r, evaluated at
  // zeta-radius R/sqrt2 with the eps grading applied.  These bound the sup
  // over the l2 ball of radius R from above (by a lattice-size factor), so
  // they are reported, and inequality checks against theory go the other way
  // (sampled lower bounds).
  std::vector<double> z_norm, chi_norm, f_norm;
  std::vector<double> z_vnorm, chi_vnorm, f_vnorm;
  double remainder_norm = 0.0, remainder_vnorm = 0.0;
  // growth reference (2 phi_rec / shrink) * M2_rec^{s-1} with phi_rec taken
  // from the recorded first-order norm; finiteness is the only assertion
  double phi_recorded = 0.0, M2_recorded = 0.0;
  std::vector<double> norm_bound;

  void validate() const;
  void fill_scalars(int p, int dim);
  void fill_bounds_from_recorded();
};

template <class C>
struct NormalFormResult {
  LatticeGrid grid;
  int p = 1;
  int order = 0;
  Poly<C> G;                   // harmonic action
  Poly<C> F;                   // order-1 interaction
  std::vector<Poly<C>> Z;      // resonant terms, index s-1
  std::vector<Poly<C>> chi;    // generators, index s-1
  std::vector<Poly<C>> Psi;    // per-order right-hand sides, index s-1
  std::vector<Poly<C>> F_seq;  // transported interaction, index s = 0..r+1
  std::vector<Poly<C>> G_seq;  // transported harmonic part, index s = 0..r+1
  Poly<C> remainder;           // order r+1 terms of the transformed Hamiltonian
  NormalFormBudget budget;
};

// Runs the order-by-order elimination: Psi_1 = F,
//   Psi_s = F_s/s + sum_{l<s} (l/s) {chi_l, Z_{s-l}},
//   {G, chi_s} + Z_s = Psi_s,
// with the transported interaction F_s and harmonic part G_s recursed from the
// generator sequence; the remainder collects order r+1.
template <class C>
NormalFormResult<C> lie_transform_normal_form(const LatticeGrid& grid, int p,
                                              NormalFormBudget budget);

// Gamma_p = on-site resonant quartic coefficient of Z_1 times 2(p+1); equals
// gamma_p / 2^p for the exact construction.
template <class C>
C extract_effective_coupling(const NormalFormResult<C>& R);

// ---- generalized stationary profile (float mode) ---------------------------

// Stationarity of G + Z in the rotating frame at the dNLS frequency: the
// first-order part reproduces dnls_residual and the higher resonant terms add
// the O(eps) correction (sqrt2/eps) dZ_{>=2}/dzetabar evaluated at sqrt2*A.
RealField generalized_soliton_residual(const NormalFormResult<std::complex<double>>& R,
                                       const RealField& A, const DnlsParams& prm, double eps);
Eigen::MatrixXd generalized_soliton_jacobian(const NormalFormResult<std::complex<double>>& R,
                                             const RealField& A, const DnlsParams& prm,
                                             double eps);

struct GeneralizedSoliton {
  RealField profile;
  double residual_norm = 0.0;
  int iterations = 0;
};
GeneralizedSoliton solve_generalized_soliton(const NormalFormResult<std::complex<double>>& R,
                                             const SolitonBranch& seed, double eps,
                                             double tol = 1e-12, int max_iter = 50);

// ---- coordinate transform (float mode) -------------------------------------

// Original coordinates as polynomial functions of normal-form coordinates:
// the exchange identity H(apply(z)) = (G + Z + remainder)(z).
struct StateTransform {
  LatticeGrid grid;
  int order = 0;
  std::vector<PolyD> components;  // per site
};

StateTransform build_state_transform(const LatticeGrid& grid, const std::vector<PolyD>& chi,
                                     int order, int degree_cap, std::size_t term_cap);
// normal form -> original
Eigen::VectorXcd transform_apply(const StateTransform& T, const Eigen::VectorXcd& z, double eps);
// original -> normal form, by fixed point; throws NonConvergence
Eigen::VectorXcd transform_invert(const StateTransform& T, const Eigen::VectorXcd& z, double eps,
                                  double tol = 1e-12, int max_iter = 60);

enum class TransformDirection { Forward, Inverse };
Eigen::VectorXcd transform_state(const StateTransform& T, const Eigen::VectorXcd& z,
                                 TransformDirection dir, double eps, double tol = 1e-12);

// (u, v) phase state to zeta = (u - i v)/sqrt2 and back
Eigen::VectorXcd state_to_zeta(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
void zeta_to_state(const Eigen::VectorXcd& z, Eigen::VectorXd& u, Eigen::VectorXd& v);

// Fourier data of a periodic orbit pulled back to normal-form coordinates:
// harmonics[m + mmax] = (1/2pi) int zeta_nf(tau) e^{-i m tau} dtau.  The tail
// compares against the generalized profile sqrt2*gensol at m = 1; matching
// frames requires the orbit to rotate at the profile's frequency 1 - eps*Om/2
// (solve the breather in FixPeriod mode at that omega).
struct TransformedTail {
  std::vector<Eigen::VectorXcd> harmonics;
  double first_harmonic_deviation = 0.0;  // ||A^(1) - sqrt2 gensol||
  double tail = 0.0;                      // deviation plus ||A^(m)|| over all m != 1
};
TransformedTail transformed_breather_tail(const StateTransform& T, const BreatherSolution& B,
                                          const RealField& gensol, double eps, int mmax = 4,
                                          int samples = 256);

// ---- template bodies --------------------------------------------------------

template <class C>
Poly<C> Poly<C>::bracket(const Poly& f, const Poly& g, int degree_cap, int order_cap,
                         std::size_t term_cap) {
  Poly out;
  for (const auto& [kf, cf] : f.terms) {
    for (const auto& [kg, cg] : g.terms) {
      const int order = kf.first + kg.first;
      if (order > order_cap) continue;
      const Monomial& mf = kf.second;
      const Monomial& mg = kg.second;
      if (mf.degree() + mg.degree() - 2 > degree_cap) continue;

      // walk common sites
      std::size_t i = 0, j = 0;
      while (i < mf.factors.size() && j < mg.factors.size()) {
        const auto& Ff = mf.factors[i];
        const auto& Fg = mg.factors[j];
        if (Ff.site < Fg.site) {
          ++i;
          continue;
        }
        if (Fg.site < Ff.site) {
          ++j;
          continue;
        }
        const long w = long(Ff.b) * Fg.a - long(Ff.a) * Fg.b;
        if (w != 0) {
          // merged exponents with one zeta and one zetabar removed at the site
          Monomial m;
          m.factors.reserve(mf.factors.size() + mg.factors.size());
          std::size_t a = 0, b = 0;
          while (a < mf.factors.size() || b < mg.factors.size()) {
            Monomial::Factor fac;
            if (b >= mg.factors.size() ||
                (a < mf.factors.size() && mf.factors[a].site < mg.factors[b].site)) {
              fac = mf.factors[a++];
            } else if (a >= mf.factors.size() || mg.factors[b].site < mf.factors[a].site) {
              fac = mg.factors[b++];
            } else {
              fac = mf.factors[a];
              fac.a += mg.factors[b].a;
              fac.b += mg.factors[b].b;
              ++a;
              ++b;
            }
            if (fac.site == Ff.site) {
              fac.a -= 1;
              fac.b -= 1;
            }
            if (fac.a != 0 || fac.b != 0) m.factors.push_back(fac);
          }
          C coef = Traits::i_times(cf * cg * Traits::integer(w));
          out.add_term(order, m, coef);
        }
        ++i;
        ++j;
      }
      if (out.terms.size() > term_cap)
        throw OrderOverflow("bracket exceeded the term cap of " + std::to_string(term_cap));
    }
  }
  return out;
}

template <class C>
Poly<C> harmonic_action(const LatticeGrid& grid) {
  Poly<C> G;
  for (int j = 0; j < grid.sites(); ++j) {
    Monomial m;
    m.factors.push_back({int32_t(j), 1, 1});
    G.add_term(0, m, CoefTraits<C>::integer(1));
  }
  return G;
}

template <class C>
Poly<C> scaled_interaction(const LatticeGrid& grid, int p, int degree_cap) {
  const int q = 2 * p + 2;
  if (degree_cap < q)
    throw DegreeOverflow("degree cap " + std::to_string(degree_cap) +
                         " below interaction degree " + std::to_string(q));
  Poly<C> F;

  // binomials for (zeta + zetabar)^q
  std::vector<long> binom(q + 1);
  binom[0] = 1;
  for (int a = 1; a <= q; ++a) binom[a] = binom[a - 1] * (q - a + 1) / a;

  // on-site u^q/q: coefficient binom(q,a) / (2^{p+1} q)
  const long denom_site = (1L << (p + 1)) * q;
  for (int j = 0; j < grid.sites(); ++j) {
    for (int a = 0; a <= q; ++a) {
      Monomial m;
      m.factors.push_back({int32_t(j), int32_t(a), int32_t(q - a)});
      F.add_term(1, m, CoefTraits<C>::ratio(binom[a], denom_site));
    }
  }

  // bond terms (u_j - u_h)^2/2 = (u_j^2 + u_h^2)/2 - u_j u_h, ghosts keep u_j^2/2
  auto add_usq = [&](int j, long num, long den) {
    // u^2/2 = (zeta^2 + 2 zeta zetabar + zetabar^2)/4 times num/den
    for (int a = 0; a <= 2; ++a) {
      Monomial m;
      m.factors.push_back({int32_t(j), int32_t(a), int32_t(2 - a)});
      F.add_term(1, m, CoefTraits<C>::ratio(num * (a == 1 ? 2 : 1), den * 4));
    }
  };
  auto add_cross = [&](int j, int h) {
    // -u_j u_h = -(zeta_j + zetabar_j)(zeta_h + zetabar_h)/2
    for (int aj = 0; aj <= 1; ++aj) {
      for (int ah = 0; ah <= 1; ++ah) {
        Monomial m;
        Monomial::Factor fj{int32_t(j), int32_t(aj), int32_t(1 - aj)};
        Monomial::Factor fh{int32_t(h), int32_t(ah), int32_t(1 - ah)};
        if (j < h) {
          m.factors = {fj, fh};
        } else {
          m.factors = {fh, fj};
        }
        F.add_term(1, m, CoefTraits<C>::ratio(-1, 2));
      }
    }
  };

  for (int j = 0; j < grid.sites(); ++j) {
    for (int k = 0; k < grid.dim(); ++k) {
      const int plus = grid.neighbor(j, 2 * k + 1);
      if (plus >= 0) {
        add_usq(j, 1, 1);
        add_usq(plus, 1, 1);
        add_cross(j, plus);
      } else {
        add_usq(j, 1, 1);  // ghost bond at the + face
      }
      if (grid.neighbor(j, 2 * k) < 0) add_usq(j, 1, 1);  // ghost bond at the - face
    }
  }
  return F;
}

template <class C>
Poly<C> build_scaled_hamiltonian(const LatticeGrid& grid, int p, int degree_cap) {
  Poly<C> H = harmonic_action<C>(grid);
  H += scaled_interaction<C>(grid, p, degree_cap);
  return H;
}

template <class C>
std::pair<Poly<C>, Poly<C>> solve_homological(const Poly<C>& Psi) {
  Poly<C> Z, chi;
  for (const auto& [k, c] : Psi.terms) {
    const int w = k.second.weight();
    if (w == 0) {
      Z.terms.emplace(k, c);
    } else {
      // {G, x m} = i w x m  =>  x = c/(iw) = -i c / w
      C x = CoefTraits<C>::i_times(c) * CoefTraits<C>::ratio(-1, w);
      chi.terms.emplace(k, x);
    }
  }
  return {Z, chi};
}

template <class C>
NormalFormResult<C> lie_transform_normal_form(const LatticeGrid& grid, int p,
                                              NormalFormBudget budget) {
  budget.validate();
  const int r = budget.order;
  // degrees grow by 2p per order; the cap must cover orders <= r, and by
  // default also the order r+1 remainder so nothing at all is truncated
  const int min_cap = (2 * p + 2) + 2 * p * (r - 1);
  if (budget.degree_cap == 0) budget.degree_cap = (2 * p + 2) + 2 * p * r;
  if (budget.degree_cap < min_cap)
    throw DegreeOverflow("degree cap " + std::to_string(budget.degree_cap) + " below " +
                         std::to_string(min_cap) + " required for order " + std::to_string(r));
  const int dcap = budget.degree_cap;
  const int ocap = r + 1;
  const std::size_t tcap = budget.term_cap;

  NormalFormResult<C> out;
  out.grid = grid;
  out.p = p;
  out.order = r;
  out.G = harmonic_action<C>(grid);
  out.F = scaled_interaction<C>(grid, p, dcap);

  // transported pieces: F_seq[s] and G_seq[s] for s = 0..r+1
  out.F_seq.assign(r + 2, Poly<C>{});
  out.G_seq.assign(r + 2, Poly<C>{});
  auto& F_seq = out.F_seq;
  auto& G_seq = out.G_seq;
  G_seq[0] = out.G;
  F_seq[1] = out.F;

  auto ratio = [](long num, long den) { return CoefTraits<C>::ratio(num, den); };

  for (int s = 1; s <= r; ++s) {
    // Psi_s = F_s/s + sum_{l=1}^{s-1} (l/s) {chi_l, Z_{s-l}}
    Poly<C> Psi = F_seq[s].scaled(ratio(1, s));
    for (int l = 1; l <= s - 1; ++l) {
      Poly<C> br = Poly<C>::bracket(out.chi[l - 1], out.Z[s - l - 1], dcap, ocap, tcap);
      Psi += br.scaled(ratio(l, s));
    }
    auto [Zs, chis] = solve_homological(Psi);
    out.Psi.push_back(Psi);
    out.Z.push_back(Zs);
    out.chi.push_back(chis);

    // transported interaction and harmonic part at the next order
    //   F_{s+1} = sum_{l=1}^{s} (l/s) {chi_l, F_{s+1-l}}
    //   G_s     = sum_{l=1}^{s} (l/s) {chi_l, G_{s-l}}
    if (s + 1 <= r + 1) {
      Poly<C> Fn;
      for (int l = 1; l <= s; ++l) {
        Poly<C> br = Poly<C>::bracket(out.chi[l - 1], F_seq[s + 1 - l], dcap, ocap, tcap);
        Fn += br.scaled(ratio(l, s));
      }
      F_seq[s + 1] = std::move(Fn);
    }
    {
      Poly<C> Gn;
      for (int l = 1; l <= s; ++l) {
        Poly<C> br = Poly<C>::bracket(out.chi[l - 1], G_seq[s - l], dcap, ocap, tcap);
        Gn += br.scaled(ratio(l, s));
      }
      G_seq[s] = std::move(Gn);
    }
  }
  // G_{r+1} with the generator list capped at r
  {
    Poly<C> Gn;
    for (int l = 1; l <= r; ++l) {
      Poly<C> br = Poly<C>::bracket(out.chi[l - 1], G_seq[r + 1 - l], dcap, ocap, tcap);
      Gn += br.scaled(ratio(l, r + 1));
    }
    G_seq[r + 1] = std::move(Gn);
  }
  out.remainder = G_seq[r + 1] + F_seq[r + 1];

  // diagnostics
  budget.fill_scalars(p, grid.dim());
  const double rad = budget.ball_radius / std::sqrt(2.0);
  for (int s = 1; s <= r; ++s) {
    budget.z_norm.push_back(out.Z[s - 1].l1_norm(rad, budget.eps));
    budget.chi_norm.push_back(out.chi[s - 1].l1_norm(rad, budget.eps));
    budget.f_norm.push_back(F_seq[s].l1_norm(rad, budget.eps));
    budget.z_vnorm.push_back(out.Z[s - 1].l1_vector_norm(rad, budget.eps));
    budget.chi_vnorm.push_back(out.chi[s - 1].l1_vector_norm(rad, budget.eps));
    budget.f_vnorm.push_back(F_seq[s].l1_vector_norm(rad, budget.eps));
  }
  budget.remainder_norm = out.remainder.l1_norm(rad, budget.eps);
  budget.remainder_vnorm = out.remainder.l1_vector_norm(rad, budget.eps);
  budget.fill_bounds_from_recorded();
  out.budget = budget;
  return out;
}

template <class C>
Poly<C> poisson(const Poly<C>& f, const Poly<C>& g, int degree_cap) {
  constexpr int kUnlimited = 1 << 24;
  Poly<C> out = Poly<C>::bracket(f, g, kUnlimited, kUnlimited, std::size_t(-1));
  if (degree_cap > 0 && out.max_degree() > degree_cap)
    throw DegreeOverflow("poisson bracket degree " + std::to_string(out.max_degree()) +
                         " exceeds cap " + std::to_string(degree_cap));
  return out;
}

template <class C>
C extract_effective_coupling(const NormalFormResult<C>& R) {
  std::vector<int> origin(R.grid.dim(), 0);
  Monomial m;
  m.factors.push_back({int32_t(R.grid.index(origin)), int32_t(R.p + 1), int32_t(R.p + 1)});
  auto it = R.Z.at(0).terms.find({1, m});
  if (it == R.Z.at(0).terms.end())
    throw ConfigInvalid("resonant on-site quartic term missing from Z_1");
  return it->second * CoefTraits<C>::integer(2 * (R.p + 1));
}

}  // namespace kgl::nf
