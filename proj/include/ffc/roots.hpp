#pragma once

#include <complex>
#include <span>
#include <vector>

namespace ffc {

/// All complex roots of sum_k coeffs[k] t^k via eigenvalues of the companion matrix.
/// Leading zero coefficients are trimmed; a constant polynomial has no roots.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

struct RealRoot {
  double value = 0.0;
  /// True when the polynomial changes sign across the root (odd multiplicity).
  bool sign_change = true;
};

/// Real roots, sorted ascending, Newton-polished, with near-duplicates merged.
/// Complex pairs whose imaginary part is below imag_tol * max(1, |re|) count as real
/// (this is how clustered double roots come out of the eigen solver).
std::vector<RealRoot> real_roots(std::span<const double> coeffs, double imag_tol = 1e-6);

double horner(std::span<const double> coeffs, double t);

/// True when every coefficient is zero up to a tolerance relative to `scale`.
bool is_zero_polynomial(std::span<const double> coeffs, double scale = 1.0);

}  // namespace ffc
