#pragma once

// Pinhole camera model, rigid target-to-camera transforms and quaternion
// algebra.
//
// Conventions:
//  - A Pose is the passive target-to-camera transform: p_cam = R * p_target + t.
//  - The boresight is +z in the camera frame.
//  - Pixel (0,0) refers to the CENTER of the top-left pixel, so pixel (i,j)
//    covers [i-0.5, i+0.5] x [j-0.5, j+0.5].

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace visyreve {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Unit quaternion (Hamilton convention, scalar first) in canonical form.
///
/// Every constructor normalizes and then forces w >= 0, so q and -q always
/// produce bit-identical objects. When w == 0 the first nonzero vector
/// component is made positive.
class Quaternion {
 public:
  Quaternion() = default;
  Quaternion(double w, double x, double y, double z);

  static Quaternion identity() { return {}; }
  /// Rotation of `angle` radians about `axis` (need not be unit length).
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  static Quaternion from_matrix(const Mat3& rotation);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Vec3 vec() const { return {x_, y_, z_}; }

  Mat3 to_matrix() const;
  Vec3 rotate(const Vec3& v) const;
  Quaternion conjugate() const;
  double norm() const;

  /// Hamilton product; the result is re-normalized and canonicalized.
  Quaternion operator*(const Quaternion& rhs) const;

  bool operator==(const Quaternion&) const = default;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Shortest-arc spherical interpolation, s in [0,1].
Quaternion slerp(const Quaternion& a, const Quaternion& b, double s);

/// Rigid target-to-camera transform.
struct Pose {
  Quaternion rotation;
  Vec3 translation = Vec3::Zero();

  Mat3 rotation_matrix() const { return rotation.to_matrix(); }
  Mat4 matrix() const;
  static Pose from_matrix(const Mat4& m);

  Pose inverse() const;
  /// Composition as 4x4 matrices: (*this) * rhs.
  Pose operator*(const Pose& rhs) const;
  /// Maps a target-frame point into the camera frame.
  Vec3 transform(const Vec3& p_target) const;
  /// Distance between camera and target origin, ||t||.
  double range() const { return translation.norm(); }
};

/// Zero-skew pinhole intrinsics.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double px = 0.0;
  double py = 0.0;
  int width = 1;
  int height = 1;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
  /// Throws DegenerateIntrinsics unless fx, fy > 0, the image is nonempty and
  /// the principal point lies inside it.
  void validate() const;
  /// Intrinsics of the same camera sampled `factor` times more densely, with
  /// pixel centers consistent with this camera's convention.
  Intrinsics upsampled(int factor) const;

  bool operator==(const Intrinsics&) const = default;
};

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

/// Projects a camera-frame point. Throws PointBehindCamera when z <= 1e-12.
ImagePoint project_camera_point(const Vec3& p_cam, const Intrinsics& k);

/// Projects a target-frame point through `pose`.
ImagePoint project(const Vec3& p_target, const Pose& pose, const Intrinsics& k);

/// Camera-frame point at z = `depth` on the ray through `x`.
/// Throws NonPositiveDepth when depth <= 0.
Vec3 backproject(const ImagePoint& x, double depth, const Intrinsics& k);

/// D such that D * source = target, i.e. D = T_target * T_source^-1.
Pose relative_pose(const Pose& source, const Pose& target);

/// Camera center in the target frame, C = -R^T t.
Vec3 camera_center(const Pose& pose);

/// Pose whose camera sits at `center` (target frame) looking at `look_at`,
/// rolled about the boresight by `roll` radians.
Pose look_at_pose(const Vec3& center, const Vec3& look_at, double roll);

}  // namespace visyreve
