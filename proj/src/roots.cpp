#include "ffc/roots.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ffc {

double horner(std::span<const double> c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

bool is_zero_polynomial(std::span<const double> c, double scale) {
  const double tol = 1e-13 * std::max(scale, 1.0);
  return std::all_of(c.begin(), c.end(), [&](double v) { return std::abs(v) <= tol; });
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  double cmax = 0.0;
  for (double c : coeffs) cmax = std::max(cmax, std::abs(c));
  if (cmax == 0.0) return {};

  std::size_t deg = coeffs.size();
  while (deg > 0 && std::abs(coeffs[deg - 1]) <= 1e-14 * cmax) --deg;
  if (deg <= 1) return {};
  --deg;  // degree of the trimmed polynomial

  // Roots at zero are factored out exactly; they are ill-conditioned in the companion form.
  std::size_t low = 0;
  while (low < deg && coeffs[low] == 0.0) ++low;
  std::vector<std::complex<double>> roots(low, {0.0, 0.0});
  const std::size_t m = deg - low;
  if (m == 0) return roots;
  if (m == 1) {
    roots.emplace_back(-coeffs[low] / coeffs[low + 1], 0.0);
    return roots;
  }

  const double lead = coeffs[deg];
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 1; i < m; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < m; ++i)
    C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m - 1)) = -coeffs[low + i] / lead;

  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) roots.push_back(ev[i]);
  return roots;
}

std::vector<RealRoot> real_roots(std::span<const double> coeffs, double imag_tol) {
  const auto all = polynomial_roots(coeffs);
  std::vector<double> derivative;
  for (std::size_t k = 1; k < coeffs.size(); ++k) derivative.push_back(static_cast<double>(k) * coeffs[k]);

  std::vector<double> candidates;
  for (const auto& z : all) {
    if (std::abs(z.imag()) > imag_tol * std::max(1.0, std::abs(z.real()))) continue;
    double t = z.real();
    // Polish only while the residual keeps shrinking; clustered roots stop early.
    double r = std::abs(horner(coeffs, t));
    for (int it = 0; it < 8 && r > 0.0; ++it) {
      const double d = horner(derivative, t);
      if (d == 0.0) break;
      const double next = t - horner(coeffs, t) / d;
      const double rn = std::abs(horner(coeffs, next));
      if (!(rn < r)) break;
      t = next;
      r = rn;
    }
    candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<RealRoot> out;
  for (std::size_t i = 0; i < candidates.size();) {
    std::size_t j = i + 1;
    while (j < candidates.size() &&
           std::abs(candidates[j] - candidates[i]) <= 1e-7 * std::max(1.0, std::abs(candidates[i])))
      ++j;
    double mean = 0.0;
    for (std::size_t k = i; k < j; ++k) mean += candidates[k];
    mean /= static_cast<double>(j - i);
    const double delta = 1e-6 * std::max(1.0, std::abs(mean));
    const double lo = horner(coeffs, mean - delta);
    const double hi = horner(coeffs, mean + delta);
    out.push_back(RealRoot{mean, (lo < 0.0) != (hi < 0.0) && lo != 0.0 && hi != 0.0});
    i = j;
  }
  return out;
}

}  // namespace ffc
