#include "ffc/config.hpp"

#include "ffc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ffc {

namespace {

// One JSON object of the config: rejects unknown keys up front and reads typed, bounded values.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> keys) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw InvalidArgument(name("") + ": expected an object");
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) throw InvalidArgument("unknown key '" + name(k) + "'");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) const { return j_.at(k); }
  std::string name(const std::string& k) const { return path_.empty() ? k : (k.empty() ? path_ : path_ + "." + k); }

  int integer(const std::string& k, int def, long lo, long hi) const {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_number_integer()) throw InvalidArgument(name(k) + ": expected an integer");
    const auto x = v.get<long>();
    if (x < lo || x > hi) throw InvalidArgument(name(k) + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
  }

  double number(const std::string& k, double def, double lo, double hi, bool open_lo = false) const {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_number()) throw InvalidArgument(name(k) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo)) {
      std::ostringstream os;
      os << name(k) << ": must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      throw InvalidArgument(os.str());
    }
    return x;
  }

  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!at(k).is_boolean()) throw InvalidArgument(name(k) + ": expected true or false");
    return at(k).get<bool>();
  }

  std::string text(const std::string& k, const std::string& def, const std::vector<std::string>& allowed = {}) const {
    if (!has(k)) return def;
    if (!at(k).is_string()) throw InvalidArgument(name(k) + ": expected a string");
    auto s = at(k).get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw InvalidArgument(name(k) + ": '" + s + "' is not one of " + list);
    }
    return s;
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_array()) throw InvalidArgument(name(k) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) throw InvalidArgument(name(k) + ": expected finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& k, std::vector<int> def, long lo, long hi) const {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_array()) throw InvalidArgument(name(k) + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw InvalidArgument(name(k) + ": expected integers");
      const auto x = e.get<long>();
      if (x < lo || x > hi) throw InvalidArgument(name(k) + ": entries must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

  // Box given either as "<prefix>lower"/"<prefix>upper" arrays or a symmetric scalar "<prefix>box".
  void box(const std::string& prefix, Eigen::VectorXd& lo, Eigen::VectorXd& hi, Eigen::Index dim, double def) const {
    const std::string kl = prefix + "lower", ku = prefix + "upper", kb = prefix + "box";
    if (has(kb) && (has(kl) || has(ku))) throw InvalidArgument(name(kb) + ": give either a box or lower/upper, not both");
    if (has(kl) != has(ku)) throw InvalidArgument(name(has(kl) ? ku : kl) + ": lower and upper must be given together");
    if (has(kl)) {
      const auto l = numbers(kl, {}), u = numbers(ku, {});
      if (static_cast<Eigen::Index>(l.size()) != dim) throw InvalidArgument(name(kl) + ": expected " + std::to_string(dim) + " entries");
      if (static_cast<Eigen::Index>(u.size()) != dim) throw InvalidArgument(name(ku) + ": expected " + std::to_string(dim) + " entries");
      lo = Eigen::Map<const Eigen::VectorXd>(l.data(), dim);
      hi = Eigen::Map<const Eigen::VectorXd>(u.data(), dim);
      if (!((hi - lo).array() > 0.0).all()) throw InvalidArgument(name(ku) + ": must exceed " + name(kl) + " in every entry");
      return;
    }
    const double b = number(kb, def, 0.0, 1e6, true);
    lo = Eigen::VectorXd::Constant(dim, -b);
    hi = Eigen::VectorXd::Constant(dim, b);
  }

 private:
  const json& j_;
  std::string path_;
};

const json& child(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

// Dimension in which the ensemble sampler draws initial conditions.
Eigen::Index sampler_dim(const SystemSpec& s) {
  switch (s.kind) {
    case SystemKind::BistableChem:
    case SystemKind::Brusselator: return 2;
    case SystemKind::Hopfield: return s.params.pairs;
    case SystemKind::LiftedRandom: return s.params.latent_dim;
    case SystemKind::DenseRandom: return s.params.n;
  }
  return 2;
}

}  // namespace

PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  const Section top(j, "", {"system", "ensemble", "reduction", "sindy", "analysis", "objective", "planner", "execute",
                            "fig1", "output", "seed", "workers"});
  c.output = top.text("output", c.output);
  if (top.has("seed")) {
    if (!top.at("seed").is_number_unsigned() && !(top.at("seed").is_number_integer() && top.at("seed").get<long>() >= 0))
      throw InvalidArgument("seed: expected a non-negative integer");
    c.seed = top.at("seed").get<std::uint64_t>();
  }
  c.workers = top.integer("workers", 1, 1, 256);

  const Section sys(child(j, "system"), "system",
                    {"kind", "n", "pairs", "gain", "latent_dim", "latent", "gamma", "density", "seed", "csv"});
  if (sys.has("csv")) {
    if (sys.has("kind")) throw InvalidArgument("system.csv: give either a generator kind or csv files, not both");
    const auto& v = sys.at("csv");
    if (v.is_string()) {
      c.csv.push_back(v.get<std::string>());
    } else if (v.is_array() && !v.empty()) {
      for (const auto& e : v) {
        if (!e.is_string()) throw InvalidArgument("system.csv: expected file paths");
        c.csv.push_back(e.get<std::string>());
      }
    } else {
      throw InvalidArgument("system.csv: expected a path or a non-empty array of paths");
    }
  } else {
    SystemSpec s;
    try {
      s.kind = system_kind_from_string(sys.text("kind", "bistable_chem"));
    } catch (const InvalidArgument&) {
      throw InvalidArgument("system.kind: '" + sys.text("kind", "") +
                            "' is not one of bistable_chem, brusselator, hopfield, lifted_random, dense_random");
    }
    s.params.n = sys.integer("n", s.kind == SystemKind::Hopfield ? 100 : 10, 1, 100000);
    s.params.pairs = sys.integer("pairs", 2, 1, 3);
    s.params.gain = sys.number("gain", 1.5, 1.0, 10.0, true);
    s.params.latent_dim = sys.integer("latent_dim", 2, 2, 3);
    s.params.latent = sys.text("latent", "random", {"random", "chaotic"});
    s.params.gamma = sys.number("gamma", 1.0, 0.0, 1e3, true);
    s.params.density = sys.number("density", 1.0, 0.0, 1.0, true);
    c.seed_in_system = sys.has("seed");
    s.params.seed = c.seed_in_system ? static_cast<std::uint64_t>(sys.integer("seed", 0, 0, 2147483647)) : c.seed;
    validate(s);
    c.system = s;
  }

  const Section red(child(j, "reduction"), "reduction", {"rank", "centering", "skip_time"});
  c.rank = red.integer("rank", 2, 2, 3);
  c.centering = red.boolean("centering", false);
  if (c.centering) throw InvalidArgument("reduction.centering: only false is supported (snapshots are not centred)");
  c.reduction_skip_time = red.number("skip_time", 0.0, 0.0, 1e5);

  const Section ens(child(j, "ensemble"), "ensemble", {"count", "dt", "horizon", "stride", "lower", "upper", "box", "noise"});
  c.ensemble.count = ens.integer("count", 40, 1, 100000);
  c.ensemble.dt = ens.number("dt", 0.01, 0.0, 1.0, true);
  c.ensemble.horizon = ens.number("horizon", 10.0, 0.0, 1e5, true);
  c.ensemble.stride = ens.integer("stride", 1, 1, 100000);
  c.ensemble.noise = ens.number("noise", 0.1, 0.0, 1e3);
  if (c.system) ens.box("", c.ensemble.lower, c.ensemble.upper, sampler_dim(*c.system), 3.0);
  else if (ens.has("box") || ens.has("lower") || ens.has("upper") || ens.has("count"))
    throw InvalidArgument("ensemble: sampling keys need a generated system, not csv input");

  const Section sin(child(j, "sindy"), "sindy", {"degree", "lambda", "max_iter", "derivatives", "skip_time", "max_samples", "model"});
  c.sindy.degree = sin.integer("degree", 3, 1, 5);
  c.sindy.lambda = sin.number("lambda", 0.05, 0.0, 1e6);
  c.sindy.max_iter = sin.integer("max_iter", 20, 1, 1000);
  c.sindy.derivative_mode = derivative_mode_from_string(sin.text("derivatives", "auto", {"auto", "exact", "finite_difference"}));
  c.sindy.skip_time = sin.number("skip_time", 0.0, 0.0, 1e5);
  c.sindy.max_samples = static_cast<std::size_t>(sin.integer("max_samples", 100000, 100, 10000000));
  c.closed_form_model = sin.text("model", "fit", {"fit", "closed_form"}) == "closed_form";

  const Section an(child(j, "analysis"), "analysis",
                   {"lower", "upper", "box", "resolution", "cycle_grid", "curve_t", "curve_samples", "state_lower",
                    "state_upper", "state_box", "probe"});
  an.box("", c.analysis.lower, c.analysis.upper, c.rank, 10.0);
  an.box("state_", c.analysis.state_lower, c.analysis.state_upper, c.rank, 10.0);
  c.analysis.resolution = an.integer("resolution", 128, 2, 2048);
  c.analysis.cycle_grid = an.integer("cycle_grid", 16, 0, c.analysis.resolution);
  const auto ct = an.numbers("curve_t", {-40.0, 40.0});
  if (ct.size() != 2 || !(ct[0] < ct[1])) throw InvalidArgument("analysis.curve_t: expected [t0, t1] with t0 < t1");
  c.analysis.curve_t0 = ct[0];
  c.analysis.curve_t1 = ct[1];
  c.analysis.curve_samples = an.integer("curve_samples", 2001, 2, 1000000);
  const Section pr(child(child(j, "analysis"), "probe"), "analysis.probe",
                   {"per_axis", "dt", "horizon", "release_horizon", "cloud_seeds", "settle_radius", "discovery_grid",
                    "fixed_point_grid"});
  auto& po = c.analysis.probe;
  po.per_axis = pr.integer("per_axis", 7, 1, 64);
  po.dt = pr.number("dt", 0.01, 0.0, 1.0, true);
  po.horizon = pr.number("horizon", 60.0, 0.0, 1e5, true);
  po.release_horizon = pr.number("release_horizon", 60.0, 0.0, 1e5, true);
  po.cloud_seeds = pr.integer("cloud_seeds", 4, 1, 64);
  po.settle_radius = pr.number("settle_radius", 0.02, 0.0, 1e3, true);
  po.discovery_grid = pr.integer("discovery_grid", 4, 0, 32);
  po.fixed_point_grid = pr.integer("fixed_point_grid", 6, 0, 64);
  po.box_lower = c.analysis.state_lower;
  po.box_upper = c.analysis.state_upper;

  const Section ob(child(j, "objective"), "objective", {"targets", "reference", "epsilon", "hold"});
  c.objective.targets = ob.integers("targets", {}, 0, 1000);
  c.objective.reference = ob.text("reference", "model", {"model", "truth"});
  c.objective.epsilon = ob.number("epsilon", 0.1, 0.0, 1e6, true);
  c.objective.hold = ob.number("hold", 5.0, 0.0, 1e5, true);
  if (c.objective.reference == "truth" && !c.system)
    throw InvalidArgument("objective.reference: 'truth' needs a generated system");

  const Section pl(child(j, "planner"), "planner", {"safety_factor", "horizon_cap", "dt", "max_candidates", "check_cycles"});
  c.planner.safety_factor = pl.number("safety_factor", 1.5, 1.0, 100.0);
  c.planner.horizon_cap = pl.number("horizon_cap", 500.0, 0.0, 1e6, true);
  c.planner.dt = pl.number("dt", 0.01, 0.0, 1.0, true);
  c.planner.max_candidates = pl.integer("max_candidates", 25, 1, 100000);
  c.planner.check_cycles = pl.boolean("check_cycles", true);

  const Section ex(child(j, "execute"), "execute", {"dt"});
  c.execute_dt = ex.number("dt", 0.01, 0.0, 1.0, true);

  const Section f1(child(j, "fig1"), "fig1", {"sizes", "densities", "trials", "trajectories", "dt", "horizon", "box"});
  c.fig1.sizes = f1.integers("sizes", c.fig1.sizes, 1, 64);
  c.fig1.densities = f1.numbers("densities", c.fig1.densities);
  for (double d : c.fig1.densities)
    if (!(d > 0.0) || d > 1.0) throw InvalidArgument("fig1.densities: entries must lie in (0, 1]");
  if (c.fig1.sizes.empty() || c.fig1.densities.empty()) throw InvalidArgument("fig1.sizes: sizes and densities must be non-empty");
  c.fig1.trials = f1.integer("trials", 100, 1, 100000);
  c.fig1.options.trajectories_per_trial = f1.integer("trajectories", 5, 1, 10000);
  c.fig1.options.dt = f1.number("dt", 0.01, 0.0, 1.0, true);
  c.fig1.options.horizon = f1.number("horizon", 10.0, 0.0, 1e5, true);
  c.fig1.options.box = f1.number("box", 2.0, 0.0, 1e6, true);
  return c;
}

void apply_seed(PipelineConfig& c, std::uint64_t seed) {
  c.seed = seed;
  if (c.system && !c.seed_in_system) c.system->params.seed = seed;
}

json config_to_json(const PipelineConfig& c) {
  json sys;
  if (c.system) {
    const auto& p = c.system->params;
    sys = {{"kind", to_string(c.system->kind)}, {"n", p.n},         {"pairs", p.pairs},       {"gain", p.gain},
           {"latent_dim", p.latent_dim},        {"latent", p.latent}, {"gamma", p.gamma},   {"density", p.density},
           {"seed", p.seed}};
  } else {
    sys = {{"csv", c.csv}};
  }
  json ens = {{"count", c.ensemble.count}, {"dt", c.ensemble.dt},       {"horizon", c.ensemble.horizon},
              {"stride", c.ensemble.stride}, {"noise", c.ensemble.noise}};
  if (c.system) {
    ens["lower"] = to_json(c.ensemble.lower);
    ens["upper"] = to_json(c.ensemble.upper);
  }
  const auto& po = c.analysis.probe;
  return {{"system", sys},
          {"ensemble", ens},
          {"reduction", {{"rank", c.rank}, {"centering", c.centering}, {"skip_time", c.reduction_skip_time}}},
          {"sindy",
           {{"degree", c.sindy.degree},
            {"lambda", c.sindy.lambda},
            {"max_iter", c.sindy.max_iter},
            {"derivatives", to_string(c.sindy.derivative_mode)},
            {"skip_time", c.sindy.skip_time},
            {"max_samples", c.sindy.max_samples},
            {"model", c.closed_form_model ? "closed_form" : "fit"}}},
          {"analysis",
           {{"lower", to_json(c.analysis.lower)},
            {"upper", to_json(c.analysis.upper)},
            {"resolution", c.analysis.resolution},
            {"cycle_grid", c.analysis.cycle_grid},
            {"curve_t", {c.analysis.curve_t0, c.analysis.curve_t1}},
            {"curve_samples", c.analysis.curve_samples},
            {"state_lower", to_json(c.analysis.state_lower)},
            {"state_upper", to_json(c.analysis.state_upper)},
            {"probe",
             {{"per_axis", po.per_axis},
              {"dt", po.dt},
              {"horizon", po.horizon},
              {"release_horizon", po.release_horizon},
              {"cloud_seeds", po.cloud_seeds},
              {"settle_radius", po.settle_radius},
              {"discovery_grid", po.discovery_grid},
              {"fixed_point_grid", po.fixed_point_grid}}}}},
          {"objective",
           {{"targets", c.objective.targets},
            {"reference", c.objective.reference},
            {"epsilon", c.objective.epsilon},
            {"hold", c.objective.hold}}},
          {"planner",
           {{"safety_factor", c.planner.safety_factor},
            {"horizon_cap", c.planner.horizon_cap},
            {"dt", c.planner.dt},
            {"max_candidates", c.planner.max_candidates},
            {"check_cycles", c.planner.check_cycles}}},
          {"execute", {{"dt", c.execute_dt}}},
          {"fig1",
           {{"sizes", c.fig1.sizes},
            {"densities", c.fig1.densities},
            {"trials", c.fig1.trials},
            {"trajectories", c.fig1.options.trajectories_per_trial},
            {"dt", c.fig1.options.dt},
            {"horizon", c.fig1.options.horizon},
            {"box", c.fig1.options.box}}},
          {"output", c.output},
          {"seed", c.seed},
          {"workers", c.workers}};
}

std::string config_help() {
  return R"(Configuration keys (JSON; unknown keys are rejected):
  seed                     run seed (default 0); also the system seed unless system.seed is set
  workers                  threads for ensemble, map and probe stages (default 1)
  output                   run directory (relative paths go under $FFC_OUTPUT_ROOT when set)
  system.kind              bistable_chem | brusselator | hopfield | lifted_random | dense_random
  system.n, pairs, gain, latent_dim, latent (random|chaotic), gamma, density, seed
  system.csv               trajectory CSV file or list of files to ingest instead of a generator
  ensemble.count, dt, horizon, stride, noise
  ensemble.box | ensemble.lower + ensemble.upper   sampler box (subspace coordinates if any)
  reduction.rank           2 or 3
  reduction.centering      false (snapshots are not centred)
  reduction.skip_time      drop samples before this time when fitting the basis
  sindy.degree, lambda, max_iter, derivatives (auto|exact|finite_difference), skip_time, max_samples,
    model (fit|closed_form: write the generator's exact polynomial instead of fitting)
  analysis.box | analysis.lower + analysis.upper   control box (length = rank)
  analysis.state_box | state_lower + state_upper   state box for fixed points and 3D probing
  analysis.resolution, cycle_grid, curve_t [t0, t1], curve_samples
  analysis.probe.per_axis, dt, horizon, release_horizon, cloud_seeds, settle_radius,
                 discovery_grid, fixed_point_grid
  objective.targets        attractor indices to visit in order; the first is the start
  objective.reference      model (model sinks at u = 0) | truth (generator attractors)
  objective.epsilon, hold
  planner.safety_factor, horizon_cap, dt, max_candidates, check_cycles
  execute.dt
  fig1.sizes, densities, trials, trajectories, dt, horizon, box
)";
}

}  // namespace ffc
