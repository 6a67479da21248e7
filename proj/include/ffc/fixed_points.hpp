#pragma once

#include "ffc/poly_system.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace ffc {

/// Planar classes: A sink, B source, C saddle with T < 0, D saddle with T > 0.
enum class Region { A, B, C, D };

char to_char(Region r);
Region region_from_char(char c);

struct Classification {
  Region region = Region::A;
  bool borderline = false;  // |T| or |D| below the borderline tolerance
};

inline constexpr double kBorderlineTol = 1e-8;

/// Partition of the (T, D) plane; every pair gets exactly one class.
Classification classify(double trace, double det);
Classification classify(const JacobianEval& jac);

struct FixedPointRecord {
  Eigen::VectorXd location;
  Eigen::VectorXd control;
  JacobianEval jac;
  Region region = Region::A;  // for 3D: A all Re < 0, B all Re > 0, C/D mixed by trace sign
  std::string signature;      // sign of each eigenvalue real part, sorted ascending ("--+")
  bool stable = false;
  bool borderline = false;
  int branch_id = -1;
};

struct StateBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool contains(const Eigen::VectorXd& x) const;
};

struct FixedPointOptions {
  int grid = 0;  // seeds per axis; 0 picks 50 in 2D and 20 in 3D
  double newton_tol = 1e-10;
  int max_iter = 100;
  double dedup_radius = 1e-6;
  bool elimination = true;  // 2D only: add roots from the planar solver
};

/// Newton iteration on F(x) + u = 0 in place. Returns true on convergence.
bool newton_solve(const PolySystem& sys, const Eigen::VectorXd& u, Eigen::VectorXd& x, double tol = 1e-10,
                  int max_iter = 100);

FixedPointRecord make_record(const PolySystem& sys, const Eigen::VectorXd& location, const Eigen::VectorXd& u);

/// All fixed points of F(x) + u inside the box, sorted lexicographically by location.
std::vector<FixedPointRecord> find_fixed_points(const PolySystem& sys, const Eigen::VectorXd& u,
                                                const StateBox& box, const FixedPointOptions& options = {});

/// Real solutions of a planar system for any control, by eliminating y once symbolically.
///
/// The resultant of f + u1 and g + u2 with respect to y is precomputed as a polynomial in
/// (x, u1, u2); each query takes its univariate roots, recovers y and polishes with Newton.
class PlanarSolver {
 public:
  explicit PlanarSolver(const PolySystem& sys);

  /// Unbounded real roots, deduplicated, sorted lexicographically. Empty optional when the
  /// elimination degenerates for this u (resultant vanishes identically).
  std::optional<std::vector<Eigen::Vector2d>> solve(const Eigen::Vector2d& u) const;

  const PolySystem& system() const { return sys_; }
  const Polynomial& resultant() const { return resultant_; }

 private:
  PolySystem sys_;
  Polynomial resultant_;  // variables (x, u1, u2)
  bool degenerate_ = false;
};

/// Sorted, deduplicated union of two point lists.
std::vector<Eigen::VectorXd> merge_points(std::vector<Eigen::VectorXd> pts, double radius);

/// Merges Newton roots of F + u: points within `radius` (relative), or each inside the other's
/// location uncertainty 10 tol / sigma_min(J), count as one root, kept at its smallest residual.
std::vector<Eigen::VectorXd> merge_roots(const PolySystem& sys, const Eigen::VectorXd& u, std::vector<Eigen::VectorXd> pts,
                                         double radius, double tol);

}  // namespace ffc
