#include "ffc/sindy.hpp"

#include "ffc/errors.hpp"

#include <cmath>
#include <functional>

namespace ffc {

Library Library::make(std::size_t vars, int degree) {
  if (vars == 0) throw InvalidArgument("library needs at least one variable");
  if (degree < 0) throw InvalidArgument("library degree must be non-negative");
  Library lib;
  lib.vars = vars;
  lib.degree = degree;
  std::vector<int> e(vars, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t var, int left) {
    if (var + 1 == vars) {
      e[var] = left;
      lib.columns.push_back(e);
      e[var] = 0;
      return;
    }
    for (int p = left; p >= 0; --p) {
      e[var] = p;
      rec(var + 1, left - p);
    }
    e[var] = 0;
  };
  for (int d = 0; d <= degree; ++d) rec(0, d);
  return lib;
}

std::string Library::column_name(std::size_t j) const {
  std::string s;
  for (std::size_t k = 0; k < vars; ++k) {
    const int p = columns[j][k];
    if (p == 0) continue;
    if (!s.empty()) s += '*';
    s += "z" + std::to_string(k + 1);
    if (p > 1) s += "^" + std::to_string(p);
  }
  return s.empty() ? "1" : s;
}

Eigen::MatrixXd build_library(const Eigen::MatrixXd& Z, const Library& lib) {
  if (static_cast<std::size_t>(Z.cols()) != lib.vars)
    throw InvalidArgument("sample width " + std::to_string(Z.cols()) + " does not match library arity " +
                          std::to_string(lib.vars));
  const Eigen::Index m = Z.rows();
  // Powers of each variable up to the library degree, then products per column.
  std::vector<Eigen::MatrixXd> powers(lib.vars, Eigen::MatrixXd(m, lib.degree + 1));
  for (std::size_t k = 0; k < lib.vars; ++k) {
    powers[k].col(0).setOnes();
    for (int p = 1; p <= lib.degree; ++p)
      powers[k].col(p) = powers[k].col(p - 1).cwiseProduct(Z.col(static_cast<Eigen::Index>(k)));
  }
  Eigen::MatrixXd Theta(m, static_cast<Eigen::Index>(lib.size()));
  for (std::size_t j = 0; j < lib.size(); ++j) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(m);
    for (std::size_t k = 0; k < lib.vars; ++k)
      if (lib.columns[j][k]) col = col.cwiseProduct(powers[k].col(lib.columns[j][k]));
    Theta.col(static_cast<Eigen::Index>(j)) = col;
  }
  return Theta;
}

std::string to_string(DerivativeMode m) {
  switch (m) {
    case DerivativeMode::Auto: return "auto";
    case DerivativeMode::Exact: return "exact";
    case DerivativeMode::FiniteDifference: return "finite_difference";
  }
  return "?";
}

DerivativeMode derivative_mode_from_string(const std::string& s) {
  if (s == "auto") return DerivativeMode::Auto;
  if (s == "exact") return DerivativeMode::Exact;
  if (s == "finite_difference") return DerivativeMode::FiniteDifference;
  throw InvalidArgument("sindy.derivatives: unknown mode '" + s + "'");
}

Eigen::MatrixXd estimate_derivatives(const Trajectory& tr, DerivativeMode mode, bool* used_exact) {
  if (mode != DerivativeMode::FiniteDifference && tr.derivs) {
    if (used_exact) *used_exact = true;
    return *tr.derivs;
  }
  if (mode == DerivativeMode::Exact) throw InvalidArgument("exact derivatives requested but not present");
  if (used_exact) *used_exact = false;
  const Eigen::Index m = tr.samples();
  if (m < 3) throw InvalidArgument("finite differences need at least 3 samples");
  const double h = tr.dt();
  for (Eigen::Index i = 1; i < m; ++i)
    if (std::abs(tr.times[i] - tr.times[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(tr.times[i])))
      throw InvalidArgument("finite differences need a uniform time step");
  const auto& X = tr.states;
  Eigen::MatrixXd D(m, X.cols());
  D.row(0) = (-3.0 * X.row(0) + 4.0 * X.row(1) - X.row(2)) / (2.0 * h);
  D.middleRows(1, m - 2) = (X.bottomRows(m - 2) - X.topRows(m - 2)) / (2.0 * h);
  D.row(m - 1) = (3.0 * X.row(m - 1) - 4.0 * X.row(m - 2) + X.row(m - 3)) / (2.0 * h);
  return D;
}

std::size_t SparseModel::support_size() const {
  return static_cast<std::size_t>((coefficients.array() != 0.0).count());
}

Eigen::VectorXd rms_residual(const Eigen::MatrixXd& design, const Eigen::MatrixXd& coef, const Eigen::MatrixXd& derivs) {
  const Eigen::MatrixXd r = design * coef - derivs;
  Eigen::VectorXd out(r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) out[j] = std::sqrt(r.col(j).squaredNorm() / static_cast<double>(r.rows()));
  return out;
}

namespace {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, bool& ridge) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() == A.cols()) return qr.solve(b);
  ridge = true;
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += 1e-10;
  return G.ldlt().solve(A.transpose() * b);
}

}  // namespace

SparseModel stlsq(const Eigen::MatrixXd& design, const Eigen::MatrixXd& derivs, double lambda, int max_iter) {
  if (design.rows() != derivs.rows()) throw InvalidArgument("design and derivative row counts differ");
  if (!(lambda >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  if (max_iter < 1) throw InvalidArgument("max_iter must be positive");
  const Eigen::Index p = design.cols(), r = derivs.cols();
  SparseModel model;
  model.threshold = lambda;
  model.coefficients = Eigen::MatrixXd::Zero(p, r);
  model.samples_used = static_cast<std::size_t>(design.rows());
  for (Eigen::Index j = 0; j < r; ++j) {
    std::vector<Eigen::Index> active(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) active[static_cast<std::size_t>(k)] = k;
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(p);
    bool stable = false;
    int it = 0;
    while (it < max_iter && !active.empty()) {
      ++it;
      Eigen::MatrixXd A(design.rows(), static_cast<Eigen::Index>(active.size()));
      for (std::size_t c = 0; c < active.size(); ++c) A.col(static_cast<Eigen::Index>(c)) = design.col(active[c]);
      const Eigen::VectorXd sol = least_squares(A, derivs.col(j), model.ridge_used);
      xi.setZero();
      std::vector<Eigen::Index> keep;
      for (std::size_t c = 0; c < active.size(); ++c) {
        xi[active[c]] = sol[static_cast<Eigen::Index>(c)];
        if (std::abs(sol[static_cast<Eigen::Index>(c)]) >= lambda) keep.push_back(active[c]);
      }
      if (keep.size() == active.size()) {
        stable = true;
        break;
      }
      active = std::move(keep);
    }
    if (!stable)
      for (Eigen::Index k = 0; k < p; ++k)
        if (std::abs(xi[k]) < lambda) xi[k] = 0.0;
    if (active.empty()) xi.setZero();
    model.coefficients.col(j) = xi;
    model.iterations = std::max(model.iterations, it);
  }
  model.residual = rms_residual(design, model.coefficients, derivs);
  return model;
}

PolySystem model_to_system(const SparseModel& model) {
  const auto& lib = model.library;
  if (static_cast<std::size_t>(model.coefficients.rows()) != lib.size() ||
      static_cast<std::size_t>(model.coefficients.cols()) != lib.vars)
    throw InvalidArgument("model coefficients do not match the library");
  std::vector<Polynomial> comps;
  for (std::size_t i = 0; i < lib.vars; ++i) {
    std::vector<Term> terms;
    for (std::size_t k = 0; k < lib.size(); ++k) {
      const double c = model.coefficients(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
      if (c != 0.0) terms.push_back(Term{c, lib.columns[k]});
    }
    comps.emplace_back(lib.vars, std::move(terms));
  }
  return PolySystem(std::move(comps));
}

SparseModel system_to_model(const PolySystem& sys, int degree) {
  if (sys.degree() > degree) throw InvalidArgument("system degree exceeds the library degree");
  SparseModel m;
  m.library = Library::make(sys.dim(), degree);
  m.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.library.size()), static_cast<Eigen::Index>(sys.dim()));
  for (std::size_t i = 0; i < sys.dim(); ++i)
    for (const auto& t : sys.component(i).terms())
      for (std::size_t k = 0; k < m.library.size(); ++k)
        if (m.library.columns[k] == t.exponents) m.coefficients(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = t.coeff;
  m.residual = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
  m.derivative_source = "closed_form";
  return m;
}

SparseModel fit_sindy(const Ensemble& ens, const SindyOptions& opt) {
  if (ens.trajectories.empty()) throw NumericError("empty ensemble");
  const Eigen::Index r = ens.trajectories.front().dim();
  std::vector<Eigen::MatrixXd> zs, ds;
  Eigen::Index total = 0;
  bool any_fd = false, any_exact = false;
  for (const auto& tr : ens.trajectories) {
    bool exact = false;
    Eigen::MatrixXd d = estimate_derivatives(tr, opt.derivative_mode, &exact);
    (exact ? any_exact : any_fd) = true;
    Eigen::Index k0 = 0;
    while (k0 < tr.samples() && tr.times[k0] < opt.skip_time - 1e-12) ++k0;
    const Eigen::Index m = tr.samples() - k0;
    zs.push_back(tr.states.bottomRows(m));
    ds.push_back(d.bottomRows(m));
    total += m;
  }
  const auto stride = static_cast<Eigen::Index>(
      (static_cast<std::size_t>(total) + opt.max_samples - 1) / std::max<std::size_t>(opt.max_samples, 1));
  const Eigen::Index step = std::max<Eigen::Index>(stride, 1);
  Eigen::MatrixXd Z((total + step - 1) / step, r), D((total + step - 1) / step, r);
  Eigen::Index row = 0, global = 0;
  for (std::size_t t = 0; t < zs.size(); ++t)
    for (Eigen::Index i = 0; i < zs[t].rows(); ++i, ++global)
      if (global % step == 0) {
        Z.row(row) = zs[t].row(i);
        D.row(row) = ds[t].row(i);
        ++row;
      }
  Z.conservativeResize(row, Eigen::NoChange);
  D.conservativeResize(row, Eigen::NoChange);

  const Library lib = Library::make(static_cast<std::size_t>(r), opt.degree);
  SparseModel model = stlsq(build_library(Z, lib), D, opt.lambda, opt.max_iter);
  model.library = lib;
  model.derivative_source = any_fd && any_exact ? "mixed" : (any_fd ? "finite_difference" : "exact");
  return model;
}

std::vector<SweepPoint> lambda_sweep(const Eigen::MatrixXd& design, const Eigen::MatrixXd& derivs,
                                     const std::vector<double>& lambdas, int max_iter) {
  std::vector<SweepPoint> out;
  for (double l : lambdas) {
    const auto m = stlsq(design, derivs, l, max_iter);
    out.push_back({l, m.support_size(), m.residual});
  }
  return out;
}

}  // namespace ffc
