#include "ffc/reduction.hpp"

#include "ffc/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace ffc {
namespace {

Eigen::Index first_kept_row(const Trajectory& tr, double skip_time) {
  if (skip_time <= 0.0) return 0;
  Eigen::Index k = 0;
  while (k < tr.samples() && tr.times[k] < skip_time - 1e-12) ++k;
  return k;
}

void fix_signs(Eigen::MatrixXd& modes) {
  for (Eigen::Index j = 0; j < modes.cols(); ++j) {
    Eigen::Index imax = 0;
    modes.col(j).cwiseAbs().maxCoeff(&imax);
    if (modes(imax, j) < 0.0) modes.col(j) *= -1.0;
  }
}

}  // namespace

Eigen::MatrixXd stack_states(const Ensemble& ens, const BasisOptions& opt) {
  if (ens.trajectories.empty()) throw NumericError("empty ensemble");
  const Eigen::Index n = ens.trajectories.front().dim();
  Eigen::Index total = 0;
  for (const auto& tr : ens.trajectories) {
    if (tr.dim() != n) throw InvalidArgument("ensemble trajectories disagree on dimension");
    total += tr.samples() - first_kept_row(tr, opt.skip_time);
  }
  Eigen::MatrixXd X(n, total);
  Eigen::Index c = 0;
  for (const auto& tr : ens.trajectories) {
    const Eigen::Index k0 = first_kept_row(tr, opt.skip_time);
    const Eigen::Index m = tr.samples() - k0;
    X.middleCols(c, m) = tr.states.bottomRows(m).transpose();
    c += m;
  }
  return X;
}

Eigen::VectorXd squared_singular_values(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(n);
  if (X.cols() >= n) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    G.selfadjointView<Eigen::Lower>().rankUpdate(X);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.selfadjointView<Eigen::Lower>(), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < n; ++i) s2[i] = std::max(es.eigenvalues()[n - 1 - i], 0.0);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
    const auto& s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s2[i] = s[i] * s[i];
  }
  return s2;
}

ReducedBasis fit_basis(const Eigen::MatrixXd& X, int r) {
  const Eigen::Index n = X.rows();
  if (r < 1 || r > n) throw InvalidArgument("rank must lie in [1, n]");
  if (X.cols() < r) throw InvalidArgument("fewer samples than the requested rank");
  if (!X.allFinite()) throw NumericError("non-finite data in basis fit");

  ReducedBasis b;
  if (X.cols() >= n) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    G.selfadjointView<Eigen::Lower>().rankUpdate(X);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.selfadjointView<Eigen::Lower>());
    b.singular_values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) b.singular_values[i] = std::sqrt(std::max(es.eigenvalues()[n - 1 - i], 0.0));
    b.modes = es.eigenvectors().rightCols(r).rowwise().reverse();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    b.singular_values = Eigen::VectorXd::Zero(n);
    b.singular_values.head(svd.singularValues().size()) = svd.singularValues();
    b.modes = svd.matrixU().leftCols(r);
  }
  if (r == n) b.modes = Eigen::MatrixXd::Identity(n, n);
  fix_signs(b.modes);
  const double s1 = b.singular_values[0];
  b.rank_deficient = b.singular_values[r - 1] <= std::numeric_limits<double>::epsilon() * static_cast<double>(n) * s1;
  return b;
}

ReducedBasis fit_basis(const Ensemble& ens, int r, const BasisOptions& opt) { return fit_basis(stack_states(ens, opt), r); }

Eigen::VectorXd variance_profile_from_squares(const Eigen::VectorXd& s2) {
  const double total = s2.sum();
  if (!(total > 0.0)) throw NumericError("variance profile undefined for all-zero data");
  Eigen::VectorXd out(s2.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s2.size(); ++i) {
    acc += s2[i];
    out[i] = acc / total;
  }
  out[s2.size() - 1] = 1.0;
  return out;
}

Eigen::VectorXd variance_profile(const Ensemble& ens, const BasisOptions& opt) {
  return variance_profile_from_squares(squared_singular_values(stack_states(ens, opt)));
}

Eigen::VectorXd project(const ReducedBasis& b, const Eigen::VectorXd& x) {
  if (x.size() != b.n()) throw InvalidArgument("state length does not match basis");
  return b.modes.transpose() * x;
}

Trajectory project(const ReducedBasis& b, const Trajectory& tr) {
  if (tr.dim() != b.n()) throw InvalidArgument("trajectory dimension does not match basis");
  Trajectory out;
  out.times = tr.times;
  out.states = tr.states * b.modes;
  if (tr.derivs) out.derivs = (*tr.derivs) * b.modes;
  if (tr.control_log.rows() == tr.samples() && tr.control_log.cols() == b.n()) out.control_log = tr.control_log * b.modes;
  out.schedule_extended = tr.schedule_extended;
  out.seed = tr.seed;
  return out;
}

Ensemble project(const ReducedBasis& b, const Ensemble& ens) {
  Ensemble out = ens;
  for (auto& tr : out.trajectories) tr = project(b, tr);
  return out;
}

Eigen::VectorXd lift_control(const ReducedBasis& b, const Eigen::VectorXd& u) {
  if (u.size() != b.rank()) throw InvalidArgument("reduced control length does not match basis rank");
  return b.modes * u;
}

ControlSchedule lift_schedule(const ReducedBasis& b, ControlSchedule s) {
  for (auto& seg : s.segments) seg.lifted = lift_control(b, seg.u);
  return s;
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("subspaces live in different dimensions");
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  if (a.cols() != b.cols()) throw InvalidArgument("subspaces have different ranks");
  // For equal ranks the projector difference has the same norm as the residual of b off a.
  const Eigen::MatrixXd resid = qb - qa * (qa.transpose() * qb);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(resid).singularValues()[0];
}

}  // namespace ffc
