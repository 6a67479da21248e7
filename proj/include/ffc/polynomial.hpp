#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ffc {

/// One monomial term: coefficient times prod_i x_i^exponents[i].
struct Term {
  double coeff = 0.0;
  std::vector<int> exponents;
};

/// Multivariate polynomial with real coefficients over a fixed number of variables.
///
/// Terms are kept in canonical form: merged by exponent vector, exact zeros dropped,
/// sorted graded-lexicographically (lowest total degree first, then x_0 power
/// descending). Evaluation uses a sparse factor list so that high-dimensional
/// polynomials with few variables per term stay cheap.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t num_vars);
  Polynomial(std::size_t num_vars, std::vector<Term> terms);

  static Polynomial constant(std::size_t num_vars, double value);
  static Polynomial variable(std::size_t num_vars, std::size_t index);
  static Polynomial monomial(double coeff, std::vector<int> exponents);

  std::size_t num_vars() const noexcept { return num_vars_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  int degree() const noexcept;
  /// Highest power of one variable over all terms.
  int degree_in(std::size_t var) const;

  double coeff(std::size_t term) const { return coeffs_[term]; }
  std::span<const int> exponents(std::size_t term) const {
    return {exps_.data() + term * num_vars_, num_vars_};
  }
  std::vector<Term> terms() const;
  /// Coefficient of the given exponent vector, zero when absent.
  double coeff_of(std::span<const int> exponents) const;

  double evaluate(std::span<const double> x) const;
  double evaluate(const Eigen::VectorXd& x) const {
    return evaluate(std::span<const double>(x.data(), std::size_t(x.size())));
  }

  Polynomial derivative(std::size_t var) const;

  /// Restrict to a line: coefficients (ascending powers) of the univariate polynomial
  /// in `var` obtained by fixing every other variable at `point`.
  std::vector<double> univariate_in(std::size_t var, std::span<const double> point) const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  /// Adds a constant (the zero-degree term), keeping canonical form.
  Polynomial plus_constant(double c) const;

  /// Exact equality of canonical forms.
  friend bool operator==(const Polynomial& a, const Polynomial& b);

 private:
  void build(std::vector<Term> terms);

  std::size_t num_vars_ = 0;
  std::vector<double> coeffs_;
  std::vector<int> exps_;  // row-major, size() x num_vars_

  // Sparse evaluation plan: factor_begin_[t]..factor_begin_[t+1] index into
  // factor_slot_, each slot an index into the per-call power table.
  std::vector<std::uint32_t> factor_begin_;
  std::vector<std::uint32_t> factor_slot_;
  std::vector<std::uint32_t> power_offset_;  // per variable, start of its power run
  std::vector<int> max_power_;
  std::size_t power_table_size_ = 0;
};

}  // namespace ffc
