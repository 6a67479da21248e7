#include "ffc/json_io.hpp"

#include "ffc/errors.hpp"

#include <fstream>
#include <sstream>

namespace ffc {

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + ": entry " + std::to_string(i) + " is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array of rows");
  if (j.empty()) return {};
  const auto cols = vector_from_json(j[0], what).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = vector_from_json(j[i], what);
    if (row.size() != cols) throw ParseError(what + ": ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

namespace {

const json& field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(what + ": missing '" + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, const std::string& what) {
  try {
    return field(j, key, what).get<T>();
  } catch (const json::exception&) {
    throw ParseError(what + ": '" + key + "' has the wrong type");
  }
}

json leg_json(const LegResult& l) {
  return {{"target", l.target},       {"success", l.success}, {"start", l.start},
          {"end", l.end},             {"final_distance", l.final_distance}, {"held", l.held}};
}

}  // namespace

json basis_to_json(const ReducedBasis& b) {
  return {{"n", b.n()},
          {"rank", b.rank()},
          {"rank_deficient", b.rank_deficient},
          {"singular_values", to_json(b.singular_values)},
          {"modes", to_json(Eigen::MatrixXd(b.modes.transpose()))}};
}

ReducedBasis basis_from_json(const json& j) {
  ReducedBasis b;
  b.modes = matrix_from_json(field(j, "modes", "basis"), "basis.modes").transpose();
  b.singular_values = vector_from_json(field(j, "singular_values", "basis"), "basis.singular_values");
  b.rank_deficient = get<bool>(j, "rank_deficient", "basis");
  if (b.modes.rows() != get<Eigen::Index>(j, "n", "basis") || b.modes.cols() != get<Eigen::Index>(j, "rank", "basis"))
    throw ParseError("basis: modes do not match n and rank");
  return b;
}

json model_to_json(const SparseModel& m) {
  json terms = json::array();
  for (std::size_t k = 0; k < m.library.size(); ++k)
    terms.push_back({{"monomial", m.library.columns[k]},
                     {"name", m.library.column_name(k)},
                     {"coefficients", to_json(Eigen::VectorXd(m.coefficients.row(static_cast<Eigen::Index>(k)).transpose()))}});
  return {{"vars", m.library.vars},
          {"degree", m.library.degree},
          {"threshold", m.threshold},
          {"support", m.support_size()},
          {"residual", to_json(m.residual)},
          {"ridge_used", m.ridge_used},
          {"iterations", m.iterations},
          {"derivative_source", m.derivative_source},
          {"samples_used", m.samples_used},
          {"terms", terms}};
}

SparseModel model_from_json(const json& j) {
  SparseModel m;
  const auto vars = get<std::size_t>(j, "vars", "model");
  const int degree = get<int>(j, "degree", "model");
  m.library = Library::make(vars, degree);
  const auto& terms = field(j, "terms", "model");
  if (!terms.is_array() || terms.size() != m.library.size())
    throw ParseError("model: expected " + std::to_string(m.library.size()) + " terms");
  m.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.library.size()), static_cast<Eigen::Index>(vars));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto mono = get<std::vector<int>>(terms[k], "monomial", "model.terms");
    if (mono != m.library.columns[k]) throw ParseError("model: term " + std::to_string(k) + " is out of library order");
    const auto c = vector_from_json(field(terms[k], "coefficients", "model.terms"), "model.terms.coefficients");
    if (c.size() != static_cast<Eigen::Index>(vars)) throw ParseError("model: coefficient count mismatch");
    m.coefficients.row(static_cast<Eigen::Index>(k)) = c.transpose();
  }
  m.threshold = get<double>(j, "threshold", "model");
  m.residual = vector_from_json(field(j, "residual", "model"), "model.residual");
  m.ridge_used = get<bool>(j, "ridge_used", "model");
  m.iterations = get<int>(j, "iterations", "model");
  m.derivative_source = get<std::string>(j, "derivative_source", "model");
  m.samples_used = get<std::size_t>(j, "samples_used", "model");
  return m;
}

json schedule_to_json(const ControlSchedule& s) {
  json segs = json::array();
  for (const auto& g : s.segments) {
    json e = {{"u", to_json(g.u)},
              {"duration", g.duration},
              {"purpose", to_string(g.purpose)},
              {"target", g.target},
              {"tier", g.tier},
              {"margin", g.margin},
              {"via_saddle_node", g.via_saddle_node},
              {"rationale", g.rationale}};
    e["lifted"] = g.lifted ? to_json(*g.lifted) : json(nullptr);
    segs.push_back(std::move(e));
  }
  return {{"safety_factor", s.safety_factor},
          {"hold_time", s.hold_time},
          {"total_duration", s.total_duration()},
          {"timing_rule", "transition: model convergence time x safety factor; hold: model settle time x safety "
                          "factor + hold time"},
          {"segments", segs}};
}

ControlSchedule schedule_from_json(const json& j) {
  ControlSchedule s;
  s.safety_factor = get<double>(j, "safety_factor", "schedule");
  s.hold_time = get<double>(j, "hold_time", "schedule");
  const auto& segs = field(j, "segments", "schedule");
  if (!segs.is_array()) throw ParseError("schedule: segments must be an array");
  for (const auto& e : segs) {
    Segment g;
    g.u = vector_from_json(field(e, "u", "schedule.segments"), "schedule.segments.u");
    g.duration = get<double>(e, "duration", "schedule.segments");
    if (!(g.duration > 0.0)) throw ParseError("schedule: segment durations must be positive");
    try {
      g.purpose = purpose_from_string(get<std::string>(e, "purpose", "schedule.segments"));
    } catch (const InvalidArgument& ex) {
      throw ParseError(std::string("schedule: ") + ex.what());
    }
    g.target = get<int>(e, "target", "schedule.segments");
    g.tier = get<int>(e, "tier", "schedule.segments");
    g.margin = get<double>(e, "margin", "schedule.segments");
    g.via_saddle_node = get<bool>(e, "via_saddle_node", "schedule.segments");
    g.rationale = get<std::string>(e, "rationale", "schedule.segments");
    if (e.contains("lifted") && !e["lifted"].is_null()) g.lifted = vector_from_json(e["lifted"], "schedule.segments.lifted");
    s.segments.push_back(std::move(g));
  }
  return s;
}

json legs_to_json(const std::vector<LegResult>& legs) {
  json a = json::array();
  for (const auto& l : legs) a.push_back(leg_json(l));
  return a;
}

json verification_to_json(const VerificationReport& r) {
  return {{"all_succeeded", r.all_succeeded()},
          {"diverged", r.diverged},
          {"legs", legs_to_json(r.legs)},
          {"max_tracking_error", r.max_tracking_error},
          {"rms_tracking_error", r.rms_tracking_error},
          {"note", r.note}};
}

json controllability_to_json(const ControllabilityReport& r, const StabilityMap& map) {
  json pairs = json::array();
  auto cells = [&](const std::vector<std::size_t>& w) {
    json a = json::array();
    for (auto c : w) a.push_back(to_json(Eigen::VectorXd(map.cells[c].u)));
    return a;
  };
  for (const auto& p : r.pairs)
    pairs.push_back({{"from", p.from},
                     {"to", p.to},
                     {"necessary", p.necessary},
                     {"sufficient", p.sufficient},
                     {"necessary_cells", p.necessary_count},
                     {"sufficient_cells", p.sufficient_count},
                     {"necessary_witness", cells(p.necessary_witness)},
                     {"sufficient_witness", cells(p.sufficient_witness)}});
  json att = json::array();
  for (std::size_t a = 0; a < map.attractors.size(); ++a)
    att.push_back({{"index", a},
                   {"branch", map.attractors[a]},
                   {"location", to_json(Eigen::VectorXd(map.rest_points[static_cast<std::size_t>(map.attractors[a])]))}});
  return {{"attractors", att},
          {"pairs", pairs},
          {"all_necessary", r.all_necessary},
          {"all_sufficient", r.all_sufficient},
          {"reach_any", r.reach_any},
          {"reachable", r.reachable}};
}

json census_to_json(const RegionCensus& c) {
  return {{"two_sinks", c.two_sinks},
          {"one_sink", c.one_sink},
          {"sink_and_cycle", c.sink_and_cycle},
          {"cycle_only", c.cycle_only},
          {"other", c.other}};
}

json probe_to_json(const AttractorProbe& p) {
  json att = json::array();
  for (std::size_t a = 0; a < p.attractors.size(); ++a)
    att.push_back({{"index", a},
                   {"kind", to_string(p.attractors[a].kind)},
                   {"point", to_json(p.attractors[a].point)},
                   {"cloud_size", p.attractors[a].cloud.size()},
                   {"match_radius", p.attractors[a].match_radius}});
  json rest = json::array();
  for (const auto& fp : p.rest_fixed_points)
    rest.push_back({{"location", to_json(fp.location)}, {"region", std::string(1, to_char(fp.region))}});
  json nodes = json::array();
  for (const auto& nd : p.nodes) {
    json under = json::array();
    for (auto k : nd.under) under.push_back(to_string(k));
    nodes.push_back({{"u", to_json(nd.u)},
                     {"fixed_points", nd.fixed_points.size()},
                     {"under", under},
                     {"settle_time", nd.settle_time},
                     {"release", nd.release},
                     {"release_time", nd.release_time}});
  }
  return {{"lower", to_json(p.lower)},
          {"upper", to_json(p.upper)},
          {"per_axis", p.per_axis},
          {"attractors", att},
          {"rest_fixed_points", rest},
          {"nodes", nodes}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(path + ": invalid JSON", line, col);
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace ffc
