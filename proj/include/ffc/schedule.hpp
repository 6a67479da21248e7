#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace ffc {

enum class SegmentPurpose { Transition, Hold };

std::string to_string(SegmentPurpose p);
SegmentPurpose purpose_from_string(const std::string& s);

/// One piece of a piecewise-constant control signal.
struct Segment {
  Eigen::VectorXd u;  // reduced-space control
  double duration = 0.0;
  SegmentPurpose purpose = SegmentPurpose::Hold;
  int target = -1;  // attractor id this segment moves to or holds at
  int tier = 0;     // 0 hold, 1 necessary-only cell, 2 sufficient cell
  double margin = 0.0;
  bool via_saddle_node = false;
  std::string rationale;
  std::optional<Eigen::VectorXd> lifted;  // full-space control, set by lift_control
};

struct ControlSchedule {
  std::vector<Segment> segments;
  double safety_factor = 1.5;
  double hold_time = 5.0;

  double total_duration() const;
  /// Index of the segment active at time t (the last one when t runs past the end).
  std::size_t segment_at(double t) const;

  static ControlSchedule constant(const Eigen::VectorXd& u, double duration);
};

}  // namespace ffc
