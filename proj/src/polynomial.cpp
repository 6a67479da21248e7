#include "ffc/polynomial.hpp"

#include "ffc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ffc {
namespace {

// Graded-lexicographic order: total degree ascending, then x_0 power descending,
// then x_1 power descending, ...
struct GradedLex {
  bool operator()(const std::vector<int>& a, const std::vector<int>& b) const {
    const int da = std::accumulate(a.begin(), a.end(), 0);
    const int db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

}  // namespace

Polynomial::Polynomial(std::size_t num_vars) : num_vars_(num_vars) { build({}); }

Polynomial::Polynomial(std::size_t num_vars, std::vector<Term> terms) : num_vars_(num_vars) {
  build(std::move(terms));
}

Polynomial Polynomial::constant(std::size_t num_vars, double value) {
  return Polynomial(num_vars, {Term{value, std::vector<int>(num_vars, 0)}});
}

Polynomial Polynomial::variable(std::size_t num_vars, std::size_t index) {
  if (index >= num_vars) throw InvalidArgument("variable index out of range");
  std::vector<int> e(num_vars, 0);
  e[index] = 1;
  return Polynomial(num_vars, {Term{1.0, std::move(e)}});
}

Polynomial Polynomial::monomial(double coeff, std::vector<int> exponents) {
  const std::size_t n = exponents.size();
  return Polynomial(n, {Term{coeff, std::move(exponents)}});
}

void Polynomial::build(std::vector<Term> terms) {
  std::map<std::vector<int>, double, GradedLex> merged;
  for (auto& t : terms) {
    if (t.exponents.size() != num_vars_)
      throw InvalidArgument("term exponent vector has length " + std::to_string(t.exponents.size()) +
                            ", expected " + std::to_string(num_vars_));
    if (!std::isfinite(t.coeff)) throw InvalidArgument("polynomial coefficient is not finite");
    for (int e : t.exponents)
      if (e < 0) throw InvalidArgument("negative exponent in polynomial term");
    merged[std::move(t.exponents)] += t.coeff;
  }

  coeffs_.clear();
  exps_.clear();
  for (const auto& [e, c] : merged) {
    if (c == 0.0) continue;
    coeffs_.push_back(c);
    exps_.insert(exps_.end(), e.begin(), e.end());
  }

  max_power_.assign(num_vars_, 0);
  for (std::size_t t = 0; t < coeffs_.size(); ++t)
    for (std::size_t v = 0; v < num_vars_; ++v)
      max_power_[v] = std::max(max_power_[v], exps_[t * num_vars_ + v]);

  power_offset_.assign(num_vars_, 0);
  std::uint32_t offset = 0;
  for (std::size_t v = 0; v < num_vars_; ++v) {
    power_offset_[v] = offset;
    offset += static_cast<std::uint32_t>(max_power_[v]);
  }
  power_table_size_ = offset;

  factor_begin_.assign(1, 0);
  factor_slot_.clear();
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    for (std::size_t v = 0; v < num_vars_; ++v) {
      const int e = exps_[t * num_vars_ + v];
      if (e > 0) factor_slot_.push_back(power_offset_[v] + static_cast<std::uint32_t>(e - 1));
    }
    factor_begin_.push_back(static_cast<std::uint32_t>(factor_slot_.size()));
  }
}

int Polynomial::degree() const noexcept {
  int d = 0;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    int s = 0;
    for (std::size_t v = 0; v < num_vars_; ++v) s += exps_[t * num_vars_ + v];
    d = std::max(d, s);
  }
  return d;
}

int Polynomial::degree_in(std::size_t var) const {
  if (var >= num_vars_) throw InvalidArgument("variable index out of range");
  return max_power_[var];
}

std::vector<Term> Polynomial::terms() const {
  std::vector<Term> out;
  out.reserve(coeffs_.size());
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    auto e = exponents(t);
    out.push_back(Term{coeffs_[t], std::vector<int>(e.begin(), e.end())});
  }
  return out;
}

double Polynomial::coeff_of(std::span<const int> e) const {
  if (e.size() != num_vars_) throw InvalidArgument("exponent vector length mismatch");
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    auto et = exponents(t);
    if (std::equal(et.begin(), et.end(), e.begin())) return coeffs_[t];
  }
  return 0.0;
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (x.size() != num_vars_)
    throw InvalidArgument("point has length " + std::to_string(x.size()) + ", polynomial expects " +
                          std::to_string(num_vars_));
  thread_local std::vector<double> table;
  table.resize(power_table_size_);
  for (std::size_t v = 0; v < num_vars_; ++v) {
    double p = 1.0;
    for (int k = 0; k < max_power_[v]; ++k) {
      p *= x[v];
      table[power_offset_[v] + k] = p;
    }
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    double term = coeffs_[t];
    for (std::uint32_t f = factor_begin_[t]; f < factor_begin_[t + 1]; ++f) term *= table[factor_slot_[f]];
    sum += term;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= num_vars_) throw InvalidArgument("variable index out of range");
  std::vector<Term> out;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    auto e = exponents(t);
    if (e[var] == 0) continue;
    Term d{coeffs_[t] * e[var], std::vector<int>(e.begin(), e.end())};
    d.exponents[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(num_vars_, std::move(out));
}

std::vector<double> Polynomial::univariate_in(std::size_t var, std::span<const double> point) const {
  if (var >= num_vars_) throw InvalidArgument("variable index out of range");
  if (point.size() != num_vars_) throw InvalidArgument("point length mismatch");
  std::vector<double> c(static_cast<std::size_t>(max_power_[var]) + 1, 0.0);
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    auto e = exponents(t);
    double v = coeffs_[t];
    for (std::size_t i = 0; i < num_vars_; ++i)
      if (i != var && e[i] > 0) v *= std::pow(point[i], e[i]);
    c[static_cast<std::size_t>(e[var])] += v;
  }
  return c;
}

Polynomial Polynomial::operator-() const { return *this * -1.0; }

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  if (rhs.num_vars_ != num_vars_) throw InvalidArgument("polynomial arity mismatch");
  auto t = terms();
  auto r = rhs.terms();
  t.insert(t.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  build(std::move(t));
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) { return *this += -rhs; }

Polynomial& Polynomial::operator*=(double s) {
  auto t = terms();
  for (auto& term : t) term.coeff *= s;
  build(std::move(t));
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_) throw InvalidArgument("polynomial arity mismatch");
  std::vector<Term> out;
  out.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ea = a.exponents(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      auto eb = b.exponents(j);
      Term t{a.coeffs_[i] * b.coeffs_[j], std::vector<int>(a.num_vars_)};
      for (std::size_t v = 0; v < a.num_vars_; ++v) t.exponents[v] = ea[v] + eb[v];
      out.push_back(std::move(t));
    }
  }
  return Polynomial(a.num_vars_, std::move(out));
}

Polynomial Polynomial::plus_constant(double c) const {
  return *this + Polynomial::constant(num_vars_, c);
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  return a.num_vars_ == b.num_vars_ && a.coeffs_ == b.coeffs_ && a.exps_ == b.exps_;
}

}  // namespace ffc
