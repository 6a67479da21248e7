#pragma once

#include "ffc/poly_system.hpp"
#include "ffc/simulation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ffc {

enum class SystemKind { BistableChem, Brusselator, Hopfield, LiftedRandom, DenseRandom };

std::string to_string(SystemKind k);
SystemKind system_kind_from_string(const std::string& s);

struct SystemParams {
  int n = 0;             // hopfield, lifted_random, dense_random
  int pairs = 2;         // hopfield memory pairs (1..3)
  double gain = 1.5;     // hopfield
  int latent_dim = 2;    // lifted_random
  std::string latent = "random";  // lifted_random: "random" or "chaotic" (3D only)
  double gamma = 1.0;    // lifted_random off-manifold decay
  double density = 1.0;  // dense_random
  std::uint64_t seed = 0;
};

struct SystemSpec {
  SystemKind kind = SystemKind::BistableChem;
  SystemParams params;
};

/// Throws InvalidArgument naming the offending parameter.
void validate(const SystemSpec& spec);

struct GroundTruth {
  std::vector<Eigen::VectorXd> attractors;  // known stable states at u = 0, full coordinates
  std::vector<Eigen::VectorXd> fixed_points;  // all known fixed points at u = 0
  std::optional<Eigen::MatrixXd> subspace;    // orthonormal n x r basis of the invariant subspace
  std::optional<PolySystem> latent;           // dynamics in subspace coordinates
  std::string notes;
};

struct GeneratedSystem {
  SystemSpec spec;
  std::shared_ptr<const VectorField> field;
  std::optional<PolySystem> poly;  // explicit monomial form when it is cheap to hold
  GroundTruth truth;
};

GeneratedSystem generate_system(const SystemSpec& spec);

PolySystem bistable_chem();
PolySystem brusselator();

/// Odd cubic Taylor polynomial of tanh.
inline double tanh_poly(double t) { return t - t * t * t / 3.0; }

/// x' = -x + W tanh_poly(g x) with W = (1/n) M M^T for a sign matrix M (n x pairs).
class HopfieldField : public VectorField {
 public:
  HopfieldField(Eigen::MatrixXd memories, double gain);
  std::size_t dim() const override { return static_cast<std::size_t>(memories_.rows()); }
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  const Eigen::MatrixXd& memories() const { return memories_; }
  double gain() const { return gain_; }
  /// Stable nonzero root of a' = -a + tanh_poly(g a).
  double memory_amplitude() const;

 private:
  Eigen::MatrixXd memories_;
  double gain_;
};

/// x' = Q F(Q^T x) - gamma (x - Q Q^T x).
class LiftedField : public VectorField {
 public:
  LiftedField(Eigen::MatrixXd basis, PolySystem latent, double gamma);
  std::size_t dim() const override { return static_cast<std::size_t>(basis_.rows()); }
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;

 private:
  Eigen::MatrixXd basis_;
  PolySystem latent_;
  double gamma_;
};

/// Polynomial field evaluated as a coefficient matrix times a shared monomial vector.
class DenseField : public VectorField {
 public:
  explicit DenseField(const PolySystem& sys);
  std::size_t dim() const override { return n_; }
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;

 private:
  std::size_t n_;
  std::vector<std::vector<int>> monomials_;  // variable index lists, e.g. {0,0,3} = x0^2 x3
  Eigen::MatrixXd coeffs_;                   // n x monomials
};

struct Sampler {
  Eigen::VectorXd lower;  // box, in subspace coordinates when the system has one
  Eigen::VectorXd upper;
  int count = 1;
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;  // orthogonal noise for systems with a subspace
};

struct Ensemble {
  std::vector<Trajectory> trajectories;
  SystemSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // one per requested trajectory, in sample order
  std::vector<std::size_t> excluded;  // indices that diverged
  double dt = 0.0;
  double horizon = 0.0;
};

struct EnsembleOptions {
  int stride = 1;
  bool record_derivs = true;
  int workers = 1;
};

/// Per-trajectory seed derived from the sampler seed and the sample index.
std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index);

Ensemble ensemble(const GeneratedSystem& sys, const Sampler& sampler, double dt, double horizon,
                  const EnsembleOptions& options = {});

struct VarianceRow {
  int n = 0;
  double density = 0.0;
  int trials_used = 0;
  int trials_excluded = 0;
  Eigen::VectorXd mean_profile;
};

struct VarianceExperimentOptions {
  int trajectories_per_trial = 5;
  double dt = 0.01;
  double horizon = 10.0;
  double box = 2.0;
};

std::vector<VarianceRow> cumulative_variance_experiment(const std::vector<int>& sizes,
                                                        const std::vector<double>& densities, int trials,
                                                        std::uint64_t seed,
                                                        const VarianceExperimentOptions& options = {});

}  // namespace ffc
