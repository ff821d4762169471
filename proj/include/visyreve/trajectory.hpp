#pragma once

#include <cstdint>
#include <vector>

#include "visyreve/geometry.hpp"

namespace visyreve {

struct TrajectorySample {
  double time = 0.0;  // seconds
  Pose pose;
};

/// Camera path through pose waypoints: a natural cubic spline through the
/// camera centers and piecewise slerp between consecutive attitudes.
class Trajectory {
 public:
  /// Throws InvalidArgument for fewer than two waypoints, mismatched sizes or
  /// times that are not strictly increasing.
  static Trajectory through(std::vector<double> times, std::vector<Pose> waypoints);

  Pose at(double time) const;
  /// `n` poses at evenly spaced times from the first to the last waypoint.
  std::vector<TrajectorySample> sample(std::size_t n) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<Pose>& waypoints() const { return waypoints_; }
  double duration() const { return times_.back() - times_.front(); }

 private:
  std::size_t segment(double time) const;
  Vec3 center(std::size_t seg, double dt) const;

  std::vector<double> times_;
  std::vector<Pose> waypoints_;
  // per segment i: C(t) = a + b dt + c dt^2 + d dt^3, dt = t - times_[i]
  std::vector<Vec3> a_, b_, c_, d_;
};

/// Random loop around the target origin: waypoint camera centers at ranges
/// in [range_min, range_max], each looking at the origin with a random roll.
/// Consecutive waypoints are at most `max_step` radians apart in direction.
Trajectory random_trajectory(std::size_t n_waypoints, double range_min, double range_max,
                             double max_step, std::uint64_t seed);

}  // namespace visyreve
