#include "ffc/poly_system.hpp"

#include "ffc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>

namespace ffc {
namespace {

void check_length(const Eigen::VectorXd& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n)
    throw InvalidArgument(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                          std::to_string(n));
}

// x^a * y^b as a two-variable monomial polynomial.
Polynomial xy_monomial(double c, int a, int b) { return Polynomial::monomial(c, {a, b}); }

}  // namespace

PolySystem::PolySystem(std::vector<Polynomial> components, Eigen::VectorXd control_offset)
    : components_(std::move(components)), control_(std::move(control_offset)) {
  const std::size_t n = components_.size();
  if (n == 0) throw InvalidArgument("polynomial system needs at least one component");
  for (const auto& c : components_)
    if (c.num_vars() != n) throw InvalidArgument("component arity does not match system dimension");
  check_length(control_, n, "control offset");
  if (!control_.allFinite()) throw InvalidArgument("control offset is not finite");
  if (n <= 3) {
    partials_.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) partials_.push_back(components_[i].derivative(j));
  }
}

PolySystem::PolySystem(std::vector<Polynomial> components) {
  const auto n = static_cast<Eigen::Index>(components.size());
  *this = PolySystem(std::move(components), Eigen::VectorXd::Zero(n));
}

void PolySystem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  check_length(x, dim(), "state");
  out.resize(static_cast<Eigen::Index>(dim()));
  const std::span<const double> xs(x.data(), dim());
  for (std::size_t i = 0; i < dim(); ++i) out[static_cast<Eigen::Index>(i)] = components_[i].evaluate(xs);
}

Eigen::VectorXd PolySystem::eval_field(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out;
  evaluate(x, out);
  return out + control_;
}

Polynomial PolySystem::partial_derivative(std::size_t component, std::size_t variable) const {
  if (component >= dim() || variable >= dim()) throw InvalidArgument("partial derivative index out of range");
  if (!partials_.empty()) return partials_[component * dim() + variable];
  return components_[component].derivative(variable);
}

Eigen::MatrixXd PolySystem::jacobian_matrix(const Eigen::VectorXd& x) const {
  check_length(x, dim(), "state");
  const auto n = static_cast<Eigen::Index>(dim());
  const std::span<const double> xs(x.data(), dim());
  Eigen::MatrixXd J(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      J(i, j) = partial_derivative(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).evaluate(xs);
  return J;
}

JacobianEval PolySystem::jacobian_at(const Eigen::VectorXd& x) const {
  if (dim() != 2 && dim() != 3)
    throw Unsupported("jacobian_at supports dimension 2 or 3, got " + std::to_string(dim()));
  JacobianEval out;
  out.matrix = jacobian_matrix(x);
  out.trace = out.matrix.trace();
  if (dim() == 2)
    out.det = out.matrix(0, 0) * out.matrix(1, 1) - out.matrix(0, 1) * out.matrix(1, 0);
  else
    out.det = out.matrix.determinant();
  out.eigenvalues = Eigen::EigenSolver<Eigen::MatrixXd>(out.matrix, false).eigenvalues();
  return out;
}

PolySystem PolySystem::apply_control(const Eigen::VectorXd& u) const {
  check_length(u, dim(), "control");
  return PolySystem(components_, u);
}

Polynomial PolySystem::trace_polynomial() const {
  if (dim() != 2) throw Unsupported("trace polynomial is defined for planar systems");
  return partial_derivative(0, 0) + partial_derivative(1, 1);
}

Polynomial PolySystem::det_polynomial() const {
  if (dim() != 2) throw Unsupported("determinant polynomial is defined for planar systems");
  return partial_derivative(0, 0) * partial_derivative(1, 1) - partial_derivative(0, 1) * partial_derivative(1, 0);
}

int PolySystem::degree() const {
  int d = 0;
  for (const auto& c : components_) d = std::max(d, c.degree());
  return d;
}

InfinityField PolySystem::infinity_transform(const Eigen::VectorXd& u) const {
  if (dim() != 2) throw Unsupported("infinity transform is defined for planar systems");
  check_length(u, 2, "control");
  // Component i: -hat_i^2 * (F_i(1/xh, 1/yh) + u_i). Multiply F_i by xh^P yh^Q to clear.
  auto build = [&](std::size_t i, Polynomial& num, int& a, int& b) {
    const Polynomial& f = components_[i];
    const int P = f.degree_in(0);
    const int Q = f.degree_in(1);
    std::vector<Term> terms;
    for (std::size_t t = 0; t < f.size(); ++t) {
      auto e = f.exponents(t);
      terms.push_back(Term{f.coeff(t), {P - e[0], Q - e[1]}});
    }
    terms.push_back(Term{u[static_cast<Eigen::Index>(i)], {P, Q}});
    Polynomial cleared(2, std::move(terms));
    // Multiply by -hat_i^2, then cancel against the denominator xh^P yh^Q.
    int lift[2] = {0, 0};
    lift[i] = 2;
    a = P;
    b = Q;
    const int cancel_x = std::min(a, lift[0]);
    const int cancel_y = std::min(b, lift[1]);
    a -= cancel_x;
    b -= cancel_y;
    num = cleared * xy_monomial(-1.0, lift[0] - cancel_x, lift[1] - cancel_y);
  };
  Polynomial nx, ny;
  int ax = 0, bx = 0, ay = 0, by = 0;
  build(0, nx, ax, bx);
  build(1, ny, ay, by);
  return InfinityField(std::move(nx), ax, bx, std::move(ny), ay, by);
}

InfinityField::InfinityField(Polynomial num_x, int den_x_a, int den_x_b, Polynomial num_y, int den_y_a,
                             int den_y_b)
    : num_x_(std::move(num_x)),
      num_y_(std::move(num_y)),
      den_x_a_(den_x_a),
      den_x_b_(den_x_b),
      den_y_a_(den_y_a),
      den_y_b_(den_y_b) {
  const int A = std::max(den_x_a_, den_y_a_);
  const int B = std::max(den_x_b_, den_y_b_);
  cleared_x_ = num_x_ * xy_monomial(1.0, 2 * A - den_x_a_, 2 * B - den_x_b_);
  cleared_y_ = num_y_ * xy_monomial(1.0, 2 * A - den_y_a_, 2 * B - den_y_b_);
}

Eigen::Vector2d InfinityField::evaluate(const Eigen::Vector2d& hat) const {
  if (hat.x() == 0.0 || hat.y() == 0.0)
    throw SingularEvaluation("hatted field evaluated on an axis");
  const std::span<const double> p(hat.data(), 2);
  return {num_x_.evaluate(p) / (std::pow(hat.x(), den_x_a_) * std::pow(hat.y(), den_x_b_)),
          num_y_.evaluate(p) / (std::pow(hat.x(), den_y_a_) * std::pow(hat.y(), den_y_b_))};
}

Eigen::Vector2d InfinityField::cleared(const Eigen::Vector2d& hat) const {
  const std::span<const double> p(hat.data(), 2);
  return {cleared_x_.evaluate(p), cleared_y_.evaluate(p)};
}

}  // namespace ffc
