#include "ffc/systems.hpp"

#include "ffc/errors.hpp"
#include "ffc/fixed_points.hpp"
#include "ffc/parallel.hpp"
#include "ffc/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace ffc {
namespace {

Polynomial mono2(double c, int a, int b) { return Polynomial::monomial(c, {a, b}); }

std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Exponent vectors of total degree <= max_degree over n variables, graded.
std::vector<std::vector<int>> monomials_up_to(std::size_t n, int max_degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t var, int left) {
    if (var == n) {
      out.push_back(e);
      return;
    }
    for (int p = left; p >= 0; --p) {
      e[var] = p;
      rec(var + 1, left - p);
    }
    e[var] = 0;
  };
  for (int d = 0; d <= max_degree; ++d) rec(0, d);
  return out;
}

Eigen::MatrixXd random_orthonormal(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    for (Eigen::Index i = 0; i < G.rows(); ++i) G(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ() * Eigen::MatrixXd::Identity(G.rows(), G.cols());
}

PolySystem lorenz_latent() {
  // Lorenz (sigma 10, beta 8/3, rho 24.4) in coordinates scaled by 1/10: two stable foci
  // coexist with the strange attractor at this rho.
  const double sigma = 10.0, beta = 8.0 / 3.0, rho = 24.4;
  auto m = [](double c, int a, int b, int d) { return Polynomial::monomial(c, {a, b, d}); };
  return PolySystem({m(-sigma, 1, 0, 0) + m(sigma, 0, 1, 0),
                     m(rho, 1, 0, 0) + m(-10.0, 1, 0, 1) + m(-1.0, 0, 1, 0),
                     m(10.0, 1, 1, 0) + m(-beta, 0, 0, 1)});
}

struct LatentCheck {
  bool ok = false;
  std::vector<Eigen::VectorXd> sinks;
  std::vector<Eigen::VectorXd> all;
};

LatentCheck check_latent(const PolySystem& sys) {
  const std::size_t r = sys.dim();
  LatentCheck out;
  StateBox box{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(r), -4.0),
               Eigen::VectorXd::Constant(static_cast<Eigen::Index>(r), 4.0)};
  FixedPointOptions fo;
  fo.grid = r == 2 ? 16 : 8;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
  const auto fps = find_fixed_points(sys, u0, box, fo);
  for (const auto& fp : fps) {
    if (fp.location.cwiseAbs().maxCoeff() > 3.0 || fp.borderline) return out;
    out.all.push_back(fp.location);
    if (fp.stable) {
      double lead = -1e300;
      for (Eigen::Index i = 0; i < fp.jac.eigenvalues.size(); ++i) lead = std::max(lead, fp.jac.eigenvalues[i].real());
      if (lead > -0.05) return out;
      out.sinks.push_back(fp.location);
    }
  }
  if (out.sinks.size() < 2) return out;
  for (std::size_t i = 0; i < out.sinks.size(); ++i)
    for (std::size_t j = i + 1; j < out.sinks.size(); ++j)
      if ((out.sinks[i] - out.sinks[j]).norm() < 1.0) return out;
  // Every probe start must settle on a sink: rules out cycles and slow manifolds.
  const int per_axis = r == 2 ? 5 : 3;
  const int total = static_cast<int>(std::pow(per_axis, static_cast<double>(r)));
  IntegrateOptions io;
  io.record_derivs = false;
  io.record_control = false;
  io.stride = 1000;
  for (int s = 0; s < total; ++s) {
    Eigen::VectorXd x0(r);
    int rem = s;
    for (std::size_t k = 0; k < r; ++k) {
      x0[static_cast<Eigen::Index>(k)] = -3.0 + 6.0 * (rem % per_axis) / (per_axis - 1);
      rem /= per_axis;
    }
    try {
      const auto tr = integrate(sys, x0, 0.02, 100.0, io);
      const Eigen::VectorXd end = tr.states.bottomRows(1).transpose();
      const bool settled = std::any_of(out.sinks.begin(), out.sinks.end(),
                                       [&](const Eigen::VectorXd& p) { return (end - p).norm() < 1e-3; });
      if (!settled) return out;
    } catch (const DivergenceError&) {
      return out;
    }
  }
  out.ok = true;
  return out;
}

GeneratedSystem make_lifted(const SystemSpec& spec) {
  const auto& p = spec.params;
  const auto r = static_cast<std::size_t>(p.latent_dim);
  auto rng = make_rng({p.seed, 0x6c69667465ull});
  PolySystem latent;
  LatentCheck check;
  if (p.latent == "chaotic") {
    latent = lorenz_latent();
    const double c = std::sqrt(8.0 / 3.0 * 23.4) / 10.0;
    check.sinks = {Eigen::Vector3d(-c, -c, 2.34), Eigen::Vector3d(c, c, 2.34)};
    check.all = {Eigen::Vector3d(0, 0, 0), check.sinks[0], check.sinks[1]};
  } else {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto monos = monomials_up_to(r, 2);
    int attempt = 0;
    for (; attempt < 5000; ++attempt) {
      std::vector<Polynomial> comps;
      for (std::size_t i = 0; i < r; ++i) {
        std::vector<Term> terms;
        for (const auto& e : monos) terms.push_back(Term{unif(rng), e});
        std::vector<int> cube(r, 0);
        cube[i] = 3;
        terms.push_back(Term{-1.0, cube});
        comps.emplace_back(r, std::move(terms));
      }
      latent = PolySystem(std::move(comps));
      check = check_latent(latent);
      if (check.ok) break;
    }
    if (!check.ok) throw NumericError("no admissible latent system found for this seed");
  }
  const Eigen::MatrixXd Q = random_orthonormal(static_cast<std::size_t>(p.n), r, rng);
  GeneratedSystem g;
  g.spec = spec;
  g.field = std::make_shared<LiftedField>(Q, latent, p.gamma);
  g.truth.subspace = Q;
  g.truth.latent = latent;
  for (const auto& s : check.sinks) g.truth.attractors.push_back(Q * s);
  for (const auto& s : check.all) g.truth.fixed_points.push_back(Q * s);
  g.truth.notes = p.latent == "chaotic" ? "latent: scaled Lorenz, two stable foci and a strange attractor"
                                        : "latent: random quadratic plus cubic damping, all starts settle on sinks";
  return g;
}

GeneratedSystem make_hopfield(const SystemSpec& spec) {
  const auto& p = spec.params;
  const auto n = static_cast<Eigen::Index>(p.n);
  auto rng = make_rng({p.seed, 0x686f70ull});
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = coin(rng) ? 1.0 : -1.0;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  // Sign of memory p on block b (4 equal blocks); rows are mutually orthogonal.
  const int pattern[3][4] = {{1, 1, 1, 1}, {1, 1, -1, -1}, {1, -1, 1, -1}};
  Eigen::MatrixXd M(n, p.pairs);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = perm[static_cast<std::size_t>(k)];
    const int block = static_cast<int>(k * 4 / n);
    for (int q = 0; q < p.pairs; ++q) M(i, q) = xi[i] * pattern[q][block];
  }
  auto field = std::make_shared<HopfieldField>(M, p.gain);
  GeneratedSystem g;
  g.spec = spec;
  g.field = field;
  const double a = field->memory_amplitude();
  for (int q = 0; q < p.pairs; ++q) {
    g.truth.attractors.push_back(a * M.col(q));
    g.truth.attractors.push_back(-a * M.col(q));
  }
  const double sn = std::sqrt(static_cast<double>(p.n));
  g.truth.subspace = M / sn;
  // Latent dynamics in z = M^T x / sqrt(n): z_q' = -z_q + (sqrt(n)/4) sum_b s_qb p(g L_b / sqrt(n)).
  const auto r = static_cast<std::size_t>(p.pairs);
  std::vector<Polynomial> comps;
  for (std::size_t q = 0; q < r; ++q) comps.push_back(-1.0 * Polynomial::variable(r, q));
  for (int b = 0; b < 4; ++b) {
    Polynomial L(r);
    for (std::size_t q = 0; q < r; ++q) L += (pattern[q][b] * p.gain / sn) * Polynomial::variable(r, q);
    const Polynomial pl = L - (1.0 / 3.0) * (L * L * L);
    for (std::size_t q = 0; q < r; ++q) comps[q] += (pattern[q][b] * sn / 4.0) * pl;
  }
  g.truth.latent = PolySystem(std::move(comps));
  g.truth.notes = "memory pairs are +/- xi_p with block sign patterns; amplitude " + std::to_string(a);
  return g;
}

GeneratedSystem make_dense(const SystemSpec& spec) {
  const auto& p = spec.params;
  const auto n = static_cast<std::size_t>(p.n);
  auto rng = make_rng({p.seed, 0x64656e7365ull, static_cast<std::uint64_t>(p.density * 1e9)});
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution include(p.density);
  const auto monos = monomials_up_to(n, 3);
  std::vector<std::vector<Term>> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : monos)
      if (include(rng)) terms[i].push_back(Term{unif(rng), e});
    const double scale = terms[i].empty() ? 1.0 : 1.0 / std::sqrt(static_cast<double>(terms[i].size()));
    for (auto& t : terms[i]) t.coeff *= scale;
  }
  // Damping weights from AM-GM on the quartic form sum_i x_i * cubic_i(x), so that
  // x . F(x) <= -sum_k x_k^4 + lower order and every trajectory stays bounded.
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& t : terms[i]) {
      const int deg = std::accumulate(t.exponents.begin(), t.exponents.end(), 0);
      if (deg != 3) continue;
      for (std::size_t k = 0; k < n; ++k) {
        const int beta = t.exponents[k] + (k == i ? 1 : 0);
        w[k] += std::abs(t.coeff) * beta / 4.0;
      }
    }
  std::vector<Polynomial> comps;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> cube(n, 0);
    cube[i] = 3;
    terms[i].push_back(Term{-(1.0 + w[i]), cube});
    comps.emplace_back(n, std::move(terms[i]));
  }
  PolySystem sys(std::move(comps));
  GeneratedSystem g;
  g.spec = spec;
  g.field = std::make_shared<DenseField>(sys);
  g.poly = std::move(sys);
  g.truth.notes = "coefficients U[-1,1]/sqrt(terms per component); damping -(1+w_i) x_i^3";
  return g;
}

}  // namespace

std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::BistableChem: return "bistable_chem";
    case SystemKind::Brusselator: return "brusselator";
    case SystemKind::Hopfield: return "hopfield";
    case SystemKind::LiftedRandom: return "lifted_random";
    case SystemKind::DenseRandom: return "dense_random";
  }
  return "?";
}

SystemKind system_kind_from_string(const std::string& s) {
  for (auto k : {SystemKind::BistableChem, SystemKind::Brusselator, SystemKind::Hopfield, SystemKind::LiftedRandom,
                 SystemKind::DenseRandom})
    if (to_string(k) == s) return k;
  throw InvalidArgument("system.kind: unknown system kind '" + s + "'");
}

void validate(const SystemSpec& spec) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case SystemKind::BistableChem:
    case SystemKind::Brusselator: return;
    case SystemKind::Hopfield:
      if (p.pairs < 1 || p.pairs > 3) throw InvalidArgument("system.pairs: must be 1, 2 or 3");
      if (p.n < 4 * p.pairs || p.n % 4 != 0) throw InvalidArgument("system.n: hopfield needs n >= 4*pairs and n divisible by 4");
      if (!(p.gain > 1.0) || !(p.gain < 10.0)) throw InvalidArgument("system.gain: must lie in (1, 10)");
      return;
    case SystemKind::LiftedRandom:
      if (p.latent_dim != 2 && p.latent_dim != 3) throw InvalidArgument("system.latent_dim: must be 2 or 3");
      if (p.n < p.latent_dim) throw InvalidArgument("system.n: must be at least latent_dim");
      if (p.latent != "random" && p.latent != "chaotic") throw InvalidArgument("system.latent: must be random or chaotic");
      if (p.latent == "chaotic" && p.latent_dim != 3) throw InvalidArgument("system.latent: chaotic latent needs latent_dim 3");
      if (!(p.gamma > 0.0)) throw InvalidArgument("system.gamma: must be positive");
      return;
    case SystemKind::DenseRandom:
      if (p.n < 1 || p.n > 64) throw InvalidArgument("system.n: dense_random needs 1 <= n <= 64");
      if (!(p.density > 0.0) || p.density > 1.0) throw InvalidArgument("system.density: must lie in (0, 1]");
      return;
  }
}

PolySystem bistable_chem() {
  return PolySystem({mono2(16.0, 0, 1) + mono2(-1.0, 2, 0) + mono2(-1.0, 1, 1) + mono2(-1.5, 1, 0),
                     mono2(1.0, 2, 0) + mono2(-8.0, 0, 1)});
}

PolySystem brusselator() {
  return PolySystem({mono2(1.0, 0, 0) + mono2(1.0, 2, 1) + mono2(-4.0, 1, 0),
                     mono2(3.0, 1, 0) + mono2(-1.0, 2, 1)});
}

GeneratedSystem generate_system(const SystemSpec& spec) {
  validate(spec);
  GeneratedSystem g;
  switch (spec.kind) {
    case SystemKind::BistableChem: {
      g.spec = spec;
      g.poly = bistable_chem();
      g.field = std::make_shared<PolySystem>(*g.poly);
      g.truth.fixed_points = {Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0.5), Eigen::Vector2d(6, 4.5)};
      g.truth.attractors = {Eigen::Vector2d(0, 0), Eigen::Vector2d(6, 4.5)};
      return g;
    }
    case SystemKind::Brusselator: {
      g.spec = spec;
      g.poly = brusselator();
      g.field = std::make_shared<PolySystem>(*g.poly);
      g.truth.fixed_points = {Eigen::Vector2d(1, 3)};
      g.truth.notes = "the only fixed point is a source surrounded by a stable limit cycle";
      return g;
    }
    case SystemKind::Hopfield: return make_hopfield(spec);
    case SystemKind::LiftedRandom: return make_lifted(spec);
    case SystemKind::DenseRandom: return make_dense(spec);
  }
  throw InvalidArgument("unknown system kind");
}

HopfieldField::HopfieldField(Eigen::MatrixXd memories, double gain) : memories_(std::move(memories)), gain_(gain) {}

void HopfieldField::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  if (x.size() != memories_.rows()) throw InvalidArgument("state has wrong length");
  const Eigen::ArrayXd y = gain_ * x.array();
  const Eigen::VectorXd act = (y - y.cube() / 3.0).matrix();
  const Eigen::VectorXd overlap = memories_.transpose() * act;
  out = memories_ * overlap / static_cast<double>(memories_.rows()) - x;
}

double HopfieldField::memory_amplitude() const { return std::sqrt(3.0 * (gain_ - 1.0) / (gain_ * gain_ * gain_)); }

LiftedField::LiftedField(Eigen::MatrixXd basis, PolySystem latent, double gamma)
    : basis_(std::move(basis)), latent_(std::move(latent)), gamma_(gamma) {
  if (static_cast<std::size_t>(basis_.cols()) != latent_.dim()) throw InvalidArgument("basis rank does not match latent dimension");
}

void LiftedField::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  if (x.size() != basis_.rows()) throw InvalidArgument("state has wrong length");
  const Eigen::VectorXd z = basis_.transpose() * x;
  Eigen::VectorXd fz;
  latent_.evaluate(z, fz);
  out = basis_ * (fz + gamma_ * z) - gamma_ * x;
}

DenseField::DenseField(const PolySystem& sys) : n_(sys.dim()) {
  std::vector<std::vector<int>> exps;
  for (const auto& comp : sys.components())
    for (std::size_t t = 0; t < comp.size(); ++t) {
      auto e = comp.exponents(t);
      exps.emplace_back(e.begin(), e.end());
    }
  std::sort(exps.begin(), exps.end());
  exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
  coeffs_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(exps.size()));
  for (std::size_t j = 0; j < exps.size(); ++j) {
    std::vector<int> vars;
    for (std::size_t k = 0; k < n_; ++k)
      for (int p = 0; p < exps[j][k]; ++p) vars.push_back(static_cast<int>(k));
    monomials_.push_back(std::move(vars));
    for (std::size_t i = 0; i < n_; ++i)
      coeffs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sys.component(i).coeff_of(exps[j]);
  }
}

void DenseField::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  if (static_cast<std::size_t>(x.size()) != n_) throw InvalidArgument("state has wrong length");
  thread_local Eigen::VectorXd m;
  m.resize(static_cast<Eigen::Index>(monomials_.size()));
  for (std::size_t j = 0; j < monomials_.size(); ++j) {
    double v = 1.0;
    for (int k : monomials_[j]) v *= x[k];
    m[static_cast<Eigen::Index>(j)] = v;
  }
  out.noalias() = coeffs_ * m;
}

std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index) {
  auto rng = make_rng({seed, static_cast<std::uint64_t>(index), 0x7472616aull});
  return rng();
}

Ensemble ensemble(const GeneratedSystem& sys, const Sampler& s, double dt, double horizon, const EnsembleOptions& opt) {
  if (s.count < 1) throw InvalidArgument("sampler.count must be at least 1");
  const auto n = static_cast<Eigen::Index>(sys.field->dim());
  const bool latent_box = sys.truth.subspace && s.lower.size() == sys.truth.subspace->cols();
  if (!latent_box && s.lower.size() != n) throw InvalidArgument("sampler box dimension matches neither state nor subspace");
  if (s.upper.size() != s.lower.size() || !((s.upper - s.lower).array() >= 0.0).all())
    throw InvalidArgument("sampler box is malformed");

  Ensemble ens;
  ens.spec = sys.spec;
  ens.seed = s.seed;
  ens.dt = dt;
  ens.horizon = horizon;
  const auto count = static_cast<std::size_t>(s.count);
  for (std::size_t i = 0; i < count; ++i) ens.seeds.push_back(trajectory_seed(s.seed, i));

  std::vector<std::optional<Trajectory>> results(count);
  const ControlSchedule zero = ControlSchedule::constant(Eigen::VectorXd::Zero(n), horizon);
  IntegrateOptions io;
  io.stride = opt.stride;
  io.record_derivs = opt.record_derivs;
  parallel_for(count, opt.workers, [&](std::size_t i) {
    std::mt19937_64 rng(ens.seeds[i]);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd box(s.lower.size());
    for (Eigen::Index k = 0; k < box.size(); ++k) box[k] = s.lower[k] + unif(rng) * (s.upper[k] - s.lower[k]);
    Eigen::VectorXd x0;
    if (latent_box) {
      const Eigen::MatrixXd& B = *sys.truth.subspace;
      std::normal_distribution<double> normal(0.0, s.noise_sigma);
      Eigen::VectorXd noise(n);
      for (Eigen::Index k = 0; k < n; ++k) noise[k] = s.noise_sigma > 0.0 ? normal(rng) : 0.0;
      noise -= B * (B.transpose() * noise);
      x0 = B * box + noise;
    } else {
      x0 = box;
    }
    try {
      Trajectory tr = integrate(*sys.field, x0, zero, dt, horizon, io);
      tr.seed = ens.seeds[i];
      results[i] = std::move(tr);
    } catch (const DivergenceError&) {
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    if (results[i]) ens.trajectories.push_back(std::move(*results[i]));
    else ens.excluded.push_back(i);
  }
  if (ens.trajectories.empty()) throw NumericError("every ensemble trajectory diverged");
  return ens;
}

std::vector<VarianceRow> cumulative_variance_experiment(const std::vector<int>& sizes, const std::vector<double>& densities,
                                                        int trials, std::uint64_t seed,
                                                        const VarianceExperimentOptions& opt) {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  std::vector<VarianceRow> rows;
  IntegrateOptions io;
  io.record_derivs = false;
  io.record_control = false;
  for (int n : sizes) {
    for (std::size_t di = 0; di < densities.size(); ++di) {
      VarianceRow row;
      row.n = n;
      row.density = densities[di];
      row.mean_profile = Eigen::VectorXd::Zero(n);
      for (int t = 0; t < trials; ++t) {
        auto rng = make_rng({seed, static_cast<std::uint64_t>(n), di, static_cast<std::uint64_t>(t)});
        SystemSpec spec;
        spec.kind = SystemKind::DenseRandom;
        spec.params.n = n;
        spec.params.density = densities[di];
        spec.params.seed = rng();
        const GeneratedSystem sys = generate_system(spec);
        std::uniform_real_distribution<double> unif(-opt.box, opt.box);
        const ControlSchedule zero = ControlSchedule::constant(Eigen::VectorXd::Zero(n), opt.horizon);
        std::vector<Eigen::MatrixXd> blocks;
        Eigen::Index cols = 0;
        for (int j = 0; j < opt.trajectories_per_trial; ++j) {
          Eigen::VectorXd x0(n);
          for (Eigen::Index k = 0; k < n; ++k) x0[k] = unif(rng);
          try {
            auto tr = integrate(*sys.field, x0, zero, opt.dt, opt.horizon, io);
            cols += tr.samples();
            blocks.push_back(tr.states.transpose());
          } catch (const DivergenceError&) {
          }
        }
        if (blocks.empty()) {
          ++row.trials_excluded;
          continue;
        }
        Eigen::MatrixXd X(n, cols);
        Eigen::Index c = 0;
        for (const auto& b : blocks) {
          X.middleCols(c, b.cols()) = b;
          c += b.cols();
        }
        row.mean_profile += variance_profile_from_squares(squared_singular_values(X));
        ++row.trials_used;
      }
      if (row.trials_used == 0) throw NumericError("every trial diverged for n = " + std::to_string(n));
      row.mean_profile /= row.trials_used;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace ffc
