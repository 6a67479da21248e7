#pragma once

#include "ffc/schedule.hpp"
#include "ffc/simulation.hpp"
#include "ffc/systems.hpp"

#include <Eigen/Dense>

namespace ffc {

struct ReducedBasis {
  Eigen::MatrixXd modes;            // n x r, orthonormal columns
  Eigen::VectorXd singular_values;  // all of them, non-increasing
  bool rank_deficient = false;      // sigma_r == 0

  Eigen::Index n() const { return modes.rows(); }
  Eigen::Index rank() const { return modes.cols(); }
};

struct BasisOptions {
  double skip_time = 0.0;  // drop samples with t < skip_time from every trajectory
};

/// Stacks states as columns (no centering) and returns the leading r left singular vectors,
/// each signed so that its largest-magnitude entry is positive. With r == n the identity
/// basis is returned, which spans the same space and keeps model coordinates equal to states.
ReducedBasis fit_basis(const Ensemble& ens, int r, const BasisOptions& options = {});
ReducedBasis fit_basis(const Eigen::MatrixXd& columns, int r);

/// Squared singular values of a column-stacked data matrix, non-increasing.
Eigen::VectorXd squared_singular_values(const Eigen::MatrixXd& columns);

/// Cumulative variance fractions (sum_{i<=k} s_i^2) / (sum_i s_i^2), k = 1..n.
Eigen::VectorXd variance_profile(const Ensemble& ens, const BasisOptions& options = {});
Eigen::VectorXd variance_profile_from_squares(const Eigen::VectorXd& sigma2);

Eigen::MatrixXd stack_states(const Ensemble& ens, const BasisOptions& options = {});

Eigen::VectorXd project(const ReducedBasis& basis, const Eigen::VectorXd& x);
Trajectory project(const ReducedBasis& basis, const Trajectory& traj);
Ensemble project(const ReducedBasis& basis, const Ensemble& ens);

Eigen::VectorXd lift_control(const ReducedBasis& basis, const Eigen::VectorXd& u_reduced);
/// Fills every segment's lifted control.
ControlSchedule lift_schedule(const ReducedBasis& basis, ControlSchedule schedule);

/// Spectral norm of the difference of orthogonal projectors onto the two column spaces.
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace ffc
