#pragma once

#include "ffc/poly_system.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace ffc {

enum class CurveKind { Hopf, HopfAtInfinity, SaddleNode, SaddleNodeAtInfinity };

std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& s);
inline bool at_infinity(CurveKind k) { return k == CurveKind::HopfAtInfinity || k == CurveKind::SaddleNodeAtInfinity; }

struct CurveSample {
  double t = 0.0;
  /// For at-infinity samples the diverging coordinate is +-inf.
  Eigen::Vector2d state = Eigen::Vector2d::Zero();
  Eigen::Vector2d control = Eigen::Vector2d::Zero();
  bool valid = false;
  int branch = 0;
  /// 'x': x = t sweep, 'y': y = t sweep, 'c': at-infinity family parameter.
  char sweep = 'x';
};

struct BifurcationCurve {
  CurveKind kind = CurveKind::Hopf;
  std::vector<CurveSample> samples;
  bool empty() const { return samples.empty(); }
};

struct CurveOptions {
  bool y_sweep = true;       // add y = t samples where the curve is steep in x
  int max_laurent_order = 3; // at-infinity families x = x0 + s, y = c s^-m with m up to this
};

/// Image of T = 0 (Hopf) or D = 0 (saddle-node) under u = -F, or the finite control limits of
/// fixed points escaping to infinity while T or D diverges (the at-infinity kinds).
BifurcationCurve bifurcation_curve(const PolySystem& sys, CurveKind kind, double t0, double t1, int samples,
                                   const CurveOptions& options = {});

/// Sign change of T (Hopf) or D (saddle-node) at +-1e-4 along the constraint gradient.
/// False at points where the gradient vanishes. Finite kinds only.
bool validate_boundary(const PolySystem& sys, CurveKind kind, const CurveSample& sample);

/// kind, t, x, y, u1, u2, valid, sweep, branch
void write_curves_csv(std::ostream& os, const std::vector<BifurcationCurve>& curves);

/// Shortest distance from u to any validated sample or to a segment joining two consecutive
/// validated samples of the same branch.
double distance_to_curve(const BifurcationCurve& curve, const Eigen::Vector2d& u, double max_gap);

}  // namespace ffc
