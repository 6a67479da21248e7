#pragma once

#include "ffc/polynomial.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ffc {

/// Autonomous intrinsic dynamics x' = G(x). Control is added by the caller.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual std::size_t dim() const = 0;
  virtual void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(dim());
    evaluate(x, out);
    return out;
  }
};

/// Jacobian of a 2- or 3-dimensional field at a point.
struct JacobianEval {
  Eigen::MatrixXd matrix;
  double trace = 0.0;
  double det = 0.0;
  Eigen::VectorXcd eigenvalues;
};

class InfinityField;

/// Polynomial vector field F(x) with an additive constant control offset u.
///
/// Values are immutable; apply_control returns a modified copy.
class PolySystem : public VectorField {
 public:
  PolySystem() = default;
  PolySystem(std::vector<Polynomial> components, Eigen::VectorXd control_offset);
  explicit PolySystem(std::vector<Polynomial> components);

  std::size_t dim() const override { return components_.size(); }
  const std::vector<Polynomial>& components() const noexcept { return components_; }
  const Polynomial& component(std::size_t i) const { return components_.at(i); }
  const Eigen::VectorXd& control_offset() const noexcept { return control_; }

  /// Intrinsic part only (no control offset).
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;

  /// F(x) + u.
  Eigen::VectorXd eval_field(const Eigen::VectorXd& x) const;

  /// Symbolic partial derivative of one component; the offset contributes nothing.
  Polynomial partial_derivative(std::size_t component, std::size_t variable) const;

  /// Requires dim 2 or 3. Independent of the control offset.
  JacobianEval jacobian_at(const Eigen::VectorXd& x) const;
  /// Jacobian matrix only; any dimension.
  Eigen::MatrixXd jacobian_matrix(const Eigen::VectorXd& x) const;

  PolySystem apply_control(const Eigen::VectorXd& u) const;

  /// Trace and determinant as polynomials (dim 2 only).
  Polynomial trace_polynomial() const;
  Polynomial det_polynomial() const;

  InfinityField infinity_transform(const Eigen::VectorXd& u) const;

  int degree() const;

 private:
  std::vector<Polynomial> components_;
  Eigen::VectorXd control_;
  std::vector<Polynomial> partials_;  // row-major dim x dim, populated when dim <= 3
};

/// Rational evaluator for the reciprocal (hatted) field of a planar system.
///
/// With xh = 1/x and yh = 1/y, component i of the hatted field is
/// numerator_i(xh, yh) / (xh^a_i * yh^b_i).
class InfinityField {
 public:
  InfinityField(Polynomial num_x, int den_x_a, int den_x_b, Polynomial num_y, int den_y_a, int den_y_b);

  /// Throws SingularEvaluation on either axis.
  Eigen::Vector2d evaluate(const Eigen::Vector2d& hat) const;

  /// The hatted field multiplied by a positive monomial so that it is polynomial.
  /// Direction matches evaluate() everywhere off the axes.
  Eigen::Vector2d cleared(const Eigen::Vector2d& hat) const;

  const Polynomial& numerator(std::size_t i) const { return i == 0 ? num_x_ : num_y_; }
  std::pair<int, int> denominator(std::size_t i) const {
    return i == 0 ? std::pair{den_x_a_, den_x_b_} : std::pair{den_y_a_, den_y_b_};
  }

 private:
  Polynomial num_x_, num_y_;
  int den_x_a_, den_x_b_, den_y_a_, den_y_b_;
  Polynomial cleared_x_, cleared_y_;
};

}  // namespace ffc
