#pragma once

#include <vector>

#include "kgl/kg_spectrum.hpp"

namespace kgl {

struct SpectralScalingReport {
  std::vector<double> eps_list;
  std::vector<std::complex<double>> lambda_list;  // matched exponent per eps
  std::vector<double> lambda_err;                 // |lambda - eps*Lambda|
  std::vector<double> vector_err;                 // aligned Fourier-component error
  std::vector<double> krein_list;
  std::vector<double> re_lambda;                  // |Re lambda| of the matched exponent
  DnlsSpectralPair reference;
  double lambda_slope = 0.0;
  double vector_slope = 0.0;
  bool krein_sign_constant = true;
  double max_re_lambda = 0.0;
};

// A simple isolated off-band imaginary eigenvalue with nonzero Krein sign and
// positive imaginary part; throws ConfigInvalid when the spectrum has none.
DnlsSpectralPair pick_reference_eigenvalue(const std::vector<DnlsSpectralPair>& spectrum);

// Small-coupling continuation of one linearization eigenvalue: for each eps a
// breather is solved, its Fourier-in-time linearization assembled, and the
// exponent nearest eps*Lambda matched.  Throws MatchAmbiguity when two
// exponents sit within 1e-3*eps of the prediction or the continued value
// jumps by more than 5 |Lambda| d(eps) between consecutive eps.
SpectralScalingReport verify_spectral_bounds(const SolitonBranch& branch,
                                             const DnlsSpectralPair& target,
                                             const std::vector<double>& eps_list,
                                             int M_breather, int M_spec, double tol = 1e-12);

}  // namespace kgl
