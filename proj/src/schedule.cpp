#include "ffc/schedule.hpp"

#include "ffc/errors.hpp"

namespace ffc {

std::string to_string(SegmentPurpose p) { return p == SegmentPurpose::Transition ? "transition" : "hold"; }

SegmentPurpose purpose_from_string(const std::string& s) {
  if (s == "transition") return SegmentPurpose::Transition;
  if (s == "hold") return SegmentPurpose::Hold;
  throw InvalidArgument("unknown segment purpose '" + s + "'");
}

double ControlSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

std::size_t ControlSchedule::segment_at(double t) const {
  if (segments.empty()) throw InvalidArgument("empty control schedule");
  double end = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    end += segments[i].duration;
    if (t < end) return i;
  }
  return segments.size() - 1;
}

ControlSchedule ControlSchedule::constant(const Eigen::VectorXd& u, double duration) {
  ControlSchedule s;
  Segment seg;
  seg.u = u;
  seg.duration = duration;
  s.segments.push_back(std::move(seg));
  return s;
}

}  // namespace ffc
