#include "visyreve/geometry.hpp"

#include <cmath>

#include "visyreve/error.hpp"

namespace visyreve {

Quaternion::Quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n < 1e-300) {
    throw Error(ErrorCode::BadQuaternion, "quaternion has zero or non-finite norm");
  }
  // already-unit input is kept as is, which makes construction idempotent
  // (a serialized canonical quaternion reloads bit-exactly)
  if (std::abs(n - 1.0) > 1e-15) {
    w /= n;
    x /= n;
    y /= n;
    z /= n;
  }
  bool flip = w < 0.0;
  if (w == 0.0) {
    flip = x < 0.0 || (x == 0.0 && (y < 0.0 || (y == 0.0 && z < 0.0)));
  }
  if (flip) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  // keep +0 for the scalar so that q and -q compare bit-identical
  w_ = w + 0.0;
  x_ = x + 0.0;
  y_ = y + 0.0;
  z_ = z + 0.0;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) {
    return {};
  }
  const Vec3 a = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quaternion Quaternion::from_matrix(const Mat3& rotation) {
  const Eigen::Quaterniond q(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 Quaternion::to_matrix() const {
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  Mat3 r;
  r << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
       2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
       2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
  return r;
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  const Vec3 q = vec();
  const Vec3 t = 2.0 * q.cross(v);
  return v + w_ * t + q.cross(t);
}

Quaternion Quaternion::conjugate() const { return {w_, -x_, -y_, -z_}; }

double Quaternion::norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

Quaternion Quaternion::operator*(const Quaternion& r) const {
  return {w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_,
          w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_,
          w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_,
          w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_};
}

Quaternion slerp(const Quaternion& a, const Quaternion& b, double s) {
  double bw = b.w(), bx = b.x(), by = b.y(), bz = b.z();
  double dot = a.w() * bw + a.x() * bx + a.y() * by + a.z() * bz;
  if (dot < 0.0) {
    dot = -dot;
    bw = -bw;
    bx = -bx;
    by = -by;
    bz = -bz;
  }
  double wa = 1.0 - s;
  double wb = s;
  if (dot < 1.0 - 1e-12) {
    const double omega = std::acos(std::min(dot, 1.0));
    const double so = std::sin(omega);
    wa = std::sin((1.0 - s) * omega) / so;
    wb = std::sin(s * omega) / so;
  }
  return {wa * a.w() + wb * bw, wa * a.x() + wb * bx, wa * a.y() + wb * by,
          wa * a.z() + wb * bz};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  return {Quaternion::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Pose Pose::inverse() const {
  const Quaternion qi = rotation.conjugate();
  return {qi, -qi.rotate(translation)};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {rotation * rhs.rotation, rotation.rotate(rhs.translation) + translation};
}

Vec3 Pose::transform(const Vec3& p_target) const {
  return rotation.rotate(p_target) + translation;
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, px, 0.0, fy, py, 0.0, 0.0, 1.0;
  return k;
}

Mat3 Intrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -px / fx, 0.0, 1.0 / fy, -py / fy, 0.0, 0.0, 1.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::DegenerateIntrinsics, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::DegenerateIntrinsics, "image size must be positive");
  }
  if (!(px >= 0.0 && px < width && py >= 0.0 && py < height)) {
    throw Error(ErrorCode::DegenerateIntrinsics, "principal point outside the image");
  }
}

Intrinsics Intrinsics::upsampled(int factor) const {
  const double f = factor;
  const double shift = 0.5 * (f - 1.0);
  return {fx * f, fy * f, px * f + shift, py * f + shift, width * factor, height * factor};
}

ImagePoint project_camera_point(const Vec3& p_cam, const Intrinsics& k) {
  if (!(p_cam.z() > 1e-12)) {
    throw Error(ErrorCode::PointBehindCamera, "camera-frame z <= 1e-12");
  }
  return {k.fx * p_cam.x() / p_cam.z() + k.px, k.fy * p_cam.y() / p_cam.z() + k.py};
}

ImagePoint project(const Vec3& p_target, const Pose& pose, const Intrinsics& k) {
  return project_camera_point(pose.transform(p_target), k);
}

Vec3 backproject(const ImagePoint& x, double depth, const Intrinsics& k) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "back-projection depth must be positive");
  }
  return {depth * (x.u - k.px) / k.fx, depth * (x.v - k.py) / k.fy, depth};
}

Pose relative_pose(const Pose& source, const Pose& target) {
  return target * source.inverse();
}

Vec3 camera_center(const Pose& pose) {
  return -pose.rotation.conjugate().rotate(pose.translation);
}

Pose look_at_pose(const Vec3& center, const Vec3& look_at, double roll) {
  const Vec3 z = (look_at - center).normalized();
  Vec3 helper = std::abs(z.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 x = helper.cross(z).normalized();
  const Vec3 y = z.cross(x);
  // rows of R are the camera axes expressed in the target frame
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  const Quaternion base = Quaternion::from_matrix(r);
  const Quaternion rolled = Quaternion::from_axis_angle(Vec3::UnitZ(), roll) * base;
  return {rolled, -rolled.rotate(center)};
}

}  // namespace visyreve
