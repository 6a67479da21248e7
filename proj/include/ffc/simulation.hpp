#pragma once

#include "ffc/errors.hpp"
#include "ffc/poly_system.hpp"
#include "ffc/schedule.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace ffc {

/// Uniformly sampled solution of x' = G(x) + u(t).
struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // samples x dim
  std::optional<Eigen::MatrixXd> derivs;
  Eigen::MatrixXd control_log;  // samples x dim, empty when not recorded
  bool schedule_extended = false;  // schedule was shorter than the horizon
  std::uint64_t seed = 0;

  Eigen::Index samples() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, Trajectory partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

struct IntegrateOptions {
  bool record_derivs = true;
  bool record_control = true;
  int stride = 1;  // keep every stride-th step
  double divergence_threshold = 1e8;
};

/// Classical RK4 with fixed step. The control for each step is the schedule segment
/// containing the step midpoint; segment u (or its lifted vector) must have length dim.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0, const ControlSchedule& schedule,
                     double dt, double horizon, const IntegrateOptions& options = {});

/// Constant control taken from the system's own offset.
Trajectory integrate(const PolySystem& sys, const Eigen::VectorXd& x0, double dt, double horizon,
                     const IntegrateOptions& options = {});

/// Single RK4 step with constant control, in place.
void rk4_step(const VectorField& field, Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt);

/// Trajectory CSV: header t,x1..xn[,u1..un][,dx1..dxn], 17 significant digits.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace ffc
