#include "ffc/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ffc {
namespace {

const Eigen::VectorXd& segment_control(const Segment& s, std::size_t n) {
  if (static_cast<std::size_t>(s.u.size()) == n) return s.u;
  if (s.lifted && static_cast<std::size_t>(s.lifted->size()) == n) return *s.lifted;
  throw InvalidArgument("schedule control has length " + std::to_string(s.u.size()) + ", system dimension is " +
                        std::to_string(n));
}

void append_number(std::string& line, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

void rk4_step(const VectorField& field, Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt) {
  thread_local Eigen::VectorXd k1, k2, k3, k4, tmp;
  field.evaluate(x, k1);
  k1 += u;
  tmp = x + 0.5 * dt * k1;
  field.evaluate(tmp, k2);
  k2 += u;
  tmp = x + 0.5 * dt * k2;
  field.evaluate(tmp, k3);
  k3 += u;
  tmp = x + dt * k3;
  field.evaluate(tmp, k4);
  k4 += u;
  x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0, const ControlSchedule& schedule,
                     double dt, double horizon, const IntegrateOptions& opt) {
  const std::size_t n = field.dim();
  if (static_cast<std::size_t>(x0.size()) != n) throw InvalidArgument("initial state has wrong length");
  if (!(dt > 0.0) || !(horizon > 0.0) || dt > horizon * (1.0 + 1e-12))
    throw InvalidArgument("integration needs 0 < dt <= horizon");
  if (opt.stride < 1) throw InvalidArgument("stride must be positive");
  if (schedule.segments.empty()) throw InvalidArgument("empty control schedule");
  for (const auto& s : schedule.segments) segment_control(s, n);

  const auto steps = static_cast<long>(std::llround(horizon / dt));
  const long kept = steps / opt.stride + 1;

  Trajectory tr;
  tr.schedule_extended = schedule.total_duration() < horizon - 1e-9;
  tr.times.resize(kept);
  tr.states.resize(kept, static_cast<Eigen::Index>(n));
  if (opt.record_derivs) tr.derivs = Eigen::MatrixXd(kept, static_cast<Eigen::Index>(n));
  if (opt.record_control) tr.control_log.resize(kept, static_cast<Eigen::Index>(n));

  Eigen::VectorXd x = x0;
  Eigen::VectorXd f;
  long row = 0;
  auto record = [&](long step) {
    const double t = static_cast<double>(step) * dt;
    tr.times[row] = t;
    tr.states.row(row) = x.transpose();
    if (opt.record_derivs || opt.record_control) {
      const Eigen::VectorXd& u = segment_control(schedule.segments[schedule.segment_at(t)], n);
      if (opt.record_control) tr.control_log.row(row) = u.transpose();
      if (opt.record_derivs) {
        field.evaluate(x, f);
        tr.derivs->row(row) = (f + u).transpose();
      }
    }
    ++row;
  };
  auto truncate = [&]() {
    tr.times.conservativeResize(row);
    tr.states.conservativeResize(row, Eigen::NoChange);
    if (tr.derivs) tr.derivs->conservativeResize(row, Eigen::NoChange);
    if (opt.record_control) tr.control_log.conservativeResize(row, Eigen::NoChange);
  };

  record(0);
  for (long k = 0; k < steps; ++k) {
    const double mid = (static_cast<double>(k) + 0.5) * dt;
    rk4_step(field, x, segment_control(schedule.segments[schedule.segment_at(mid)], n), dt);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opt.divergence_threshold) {
      truncate();
      std::ostringstream msg;
      msg << "trajectory diverged at t = " << static_cast<double>(k + 1) * dt;
      throw DivergenceError(msg.str(), std::move(tr));
    }
    if ((k + 1) % opt.stride == 0) record(k + 1);
  }
  truncate();
  return tr;
}

Trajectory integrate(const PolySystem& sys, const Eigen::VectorXd& x0, double dt, double horizon,
                     const IntegrateOptions& options) {
  return integrate(sys, x0, ControlSchedule::constant(sys.control_offset(), horizon), dt, horizon, options);
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  const Eigen::Index n = tr.dim();
  const bool with_u = tr.control_log.rows() == tr.samples() && tr.control_log.size() > 0 &&
                      !tr.control_log.isZero(0.0);
  const bool with_dx = tr.derivs.has_value();
  std::string line = "t";
  for (Eigen::Index j = 0; j < n; ++j) line += ",x" + std::to_string(j + 1);
  if (with_u)
    for (Eigen::Index j = 0; j < n; ++j) line += ",u" + std::to_string(j + 1);
  if (with_dx)
    for (Eigen::Index j = 0; j < n; ++j) line += ",dx" + std::to_string(j + 1);
  out << line << '\n';
  for (Eigen::Index i = 0; i < tr.samples(); ++i) {
    line.clear();
    append_number(line, tr.times[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      line += ',';
      append_number(line, tr.states(i, j));
    }
    if (with_u)
      for (Eigen::Index j = 0; j < n; ++j) {
        line += ',';
        append_number(line, tr.control_log(i, j));
      }
    if (with_dx)
      for (Eigen::Index j = 0; j < n; ++j) {
        line += ',';
        append_number(line, (*tr.derivs)(i, j));
      }
    out << line << '\n';
  }
  if (!out) throw InvalidArgument("failed writing " + path);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty file", 1, 1);

  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  if (names.size() < 2 || names[0] != "t") throw ParseError(path + ": header must start with t", 1, 1);
  std::size_t nx = 0, nu = 0, ndx = 0;
  for (std::size_t c = 1; c < names.size(); ++c) {
    const std::string& nm = names[c];
    auto expect = [&](const std::string& prefix, std::size_t& count) {
      if (nm != prefix + std::to_string(count + 1)) throw ParseError(path + ": unexpected column '" + nm + "'", 1, c + 1);
      ++count;
    };
    if (nm.rfind("dx", 0) == 0)
      expect("dx", ndx);
    else if (nm.rfind("x", 0) == 0 && nu == 0 && ndx == 0)
      expect("x", nx);
    else if (nm.rfind("u", 0) == 0 && ndx == 0)
      expect("u", nu);
    else
      throw ParseError(path + ": unexpected column '" + nm + "'", 1, c + 1);
  }
  if (nx == 0 || (nu != 0 && nu != nx) || (ndx != 0 && ndx != nx))
    throw ParseError(path + ": inconsistent column groups", 1, 1);

  std::vector<double> values;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::size_t col = 0, pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      ++col;
      if (col > names.size()) throw ParseError(path + ": too many fields", row, col);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw ParseError(path + ": malformed number '" + cell + "'", row, col);
      values.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (col != names.size()) throw ParseError(path + ": too few fields", row, col);
  }
  const auto m = static_cast<Eigen::Index>(values.size() / names.size());
  if (m == 0) throw ParseError(path + ": no data rows", 2, 1);
  const auto w = static_cast<Eigen::Index>(names.size());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> table(values.data(), m, w);

  Trajectory tr;
  tr.times = table.col(0);
  for (Eigen::Index i = 1; i < m; ++i)
    if (!(tr.times[i] > tr.times[i - 1])) throw ParseError(path + ": times not increasing", static_cast<std::size_t>(i + 2), 1);
  const auto n = static_cast<Eigen::Index>(nx);
  tr.states = table.block(0, 1, m, n);
  if (nu) tr.control_log = table.block(0, 1 + n, m, n);
  else tr.control_log = Eigen::MatrixXd::Zero(m, n);
  if (ndx) tr.derivs = table.block(0, 1 + n + static_cast<Eigen::Index>(nu), m, n);
  return tr;
}

}  // namespace ffc
