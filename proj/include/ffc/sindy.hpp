#pragma once

#include "ffc/poly_system.hpp"
#include "ffc/simulation.hpp"
#include "ffc/systems.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ffc {

/// Monomial library over `vars` variables up to total degree `degree`, graded with the
/// constant first and, within a degree, higher powers of earlier variables first:
/// [1, x, y, x^2, xy, y^2, ...].
struct Library {
  std::size_t vars = 0;
  int degree = 3;
  std::vector<std::vector<int>> columns;

  static Library make(std::size_t vars, int degree);
  std::size_t size() const { return columns.size(); }
  std::string column_name(std::size_t j) const;
};

/// m x p design matrix, entry (k, j) = monomial j at sample k.
Eigen::MatrixXd build_library(const Eigen::MatrixXd& samples, const Library& lib);

enum class DerivativeMode { Auto, Exact, FiniteDifference };

std::string to_string(DerivativeMode m);
DerivativeMode derivative_mode_from_string(const std::string& s);

/// Exact derivatives when the trajectory carries them (and mode allows), otherwise
/// second-order central differences with second-order one-sided ends.
Eigen::MatrixXd estimate_derivatives(const Trajectory& traj, DerivativeMode mode = DerivativeMode::Auto,
                                     bool* used_exact = nullptr);

struct SparseModel {
  Library library;
  Eigen::MatrixXd coefficients;  // p x r
  double threshold = 0.0;
  Eigen::VectorXd residual;  // RMS per target variable
  bool ridge_used = false;
  int iterations = 0;
  std::string derivative_source = "exact";
  std::size_t samples_used = 0;

  std::size_t support_size() const;
};

/// Sequentially thresholded least squares, column by column.
SparseModel stlsq(const Eigen::MatrixXd& design, const Eigen::MatrixXd& derivs, double lambda, int max_iter = 20);

/// RMS residual per column of design * coefficients - derivs.
Eigen::VectorXd rms_residual(const Eigen::MatrixXd& design, const Eigen::MatrixXd& coefficients,
                             const Eigen::MatrixXd& derivs);

PolySystem model_to_system(const SparseModel& model);
/// Exact model of a polynomial system over the degree-`degree` library (zero residual).
SparseModel system_to_model(const PolySystem& sys, int degree);

struct SindyOptions {
  int degree = 3;
  double lambda = 0.05;
  int max_iter = 20;
  DerivativeMode derivative_mode = DerivativeMode::Auto;
  std::size_t max_samples = 100000;
  double skip_time = 0.0;
};

/// Fits the autonomous model to every trajectory of a (reduced) ensemble.
SparseModel fit_sindy(const Ensemble& reduced, const SindyOptions& options);

struct SweepPoint {
  double lambda;
  std::size_t support;
  Eigen::VectorXd residual;
};
std::vector<SweepPoint> lambda_sweep(const Eigen::MatrixXd& design, const Eigen::MatrixXd& derivs,
                                     const std::vector<double>& lambdas, int max_iter = 20);

}  // namespace ffc
