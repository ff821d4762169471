#include "visyreve/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "visyreve/error.hpp"
#include "visyreve/random.hpp"

namespace visyreve {

Trajectory Trajectory::through(std::vector<double> times, std::vector<Pose> waypoints) {
  if (waypoints.size() < 2 || times.size() != waypoints.size()) {
    throw Error(ErrorCode::InvalidArgument, "a trajectory needs >= 2 waypoints with one time each");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "waypoint times must be strictly increasing");
    }
  }
  Trajectory tr;
  tr.times_ = std::move(times);
  tr.waypoints_ = std::move(waypoints);
  const std::size_t n = tr.times_.size() - 1;  // segments
  std::vector<Vec3> y(n + 1);
  for (std::size_t i = 0; i <= n; ++i) y[i] = camera_center(tr.waypoints_[i]);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = tr.times_[i + 1] - tr.times_[i];

  // second derivatives m of the natural spline (m_0 = m_n = 0), Thomas algorithm
  std::vector<Vec3> m(n + 1, Vec3::Zero());
  if (n >= 2) {
    std::vector<double> diag(n + 1), upper(n + 1);
    std::vector<Vec3> rhs(n + 1, Vec3::Zero());
    for (std::size_t i = 1; i < n; ++i) {
      diag[i] = 2.0 * (h[i - 1] + h[i]);
      upper[i] = h[i];
      rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    for (std::size_t i = 2; i < n; ++i) {
      const double w = h[i - 1] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 1;) m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    tr.a_.push_back(y[i]);
    tr.b_.push_back((y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0);
    tr.c_.push_back(m[i] / 2.0);
    tr.d_.push_back((m[i + 1] - m[i]) / (6.0 * h[i]));
  }
  return tr;
}

std::size_t Trajectory::segment(double time) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), time);
  const std::size_t i = it == times_.begin() ? 0 : std::size_t(it - times_.begin()) - 1;
  return std::min(i, times_.size() - 2);
}

Vec3 Trajectory::center(std::size_t seg, double dt) const {
  return a_[seg] + dt * (b_[seg] + dt * (c_[seg] + dt * d_[seg]));
}

Pose Trajectory::at(double time) const {
  const double t = std::clamp(time, times_.front(), times_.back());
  const std::size_t i = segment(t);
  const double dt = t - times_[i];
  const double s = dt / (times_[i + 1] - times_[i]);
  const Quaternion q = slerp(waypoints_[i].rotation, waypoints_[i + 1].rotation, s);
  return {q, -q.rotate(center(i, dt))};
}

std::vector<TrajectorySample> Trajectory::sample(std::size_t n) const {
  std::vector<TrajectorySample> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = n == 1 ? times_.front()
                            : times_.front() + duration() * double(j) / double(n - 1);
    out.push_back({t, at(t)});
  }
  return out;
}

Trajectory random_trajectory(std::size_t n_waypoints, double range_min, double range_max,
                             double max_step, std::uint64_t seed) {
  using std::numbers::pi;
  if (n_waypoints < 2 || !(range_min > 0.0 && range_max >= range_min) || !(max_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need >= 2 waypoints, 0 < range_min <= range_max, max_step > 0");
  }
  Rng rng(seed);
  Vec3 dir = uniform_rotation(rng).rotate(Vec3::UnitZ());
  std::vector<double> times;
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < n_waypoints; ++i) {
    if (i > 0) {
      Vec3 axis = dir.cross(uniform_rotation(rng).rotate(Vec3::UnitX()));
      if (axis.norm() < 1e-6) axis = dir.unitOrthogonal();
      dir = Quaternion::from_axis_angle(axis, max_step * rng.uniform()).rotate(dir).normalized();
    }
    const double range = rng.uniform(range_min, range_max);
    const double roll = rng.uniform(-pi, pi);
    times.push_back(double(i));
    poses.push_back(look_at_pose(dir * range, Vec3::Zero(), roll));
  }
  return Trajectory::through(std::move(times), std::move(poses));
}

}  // namespace visyreve
