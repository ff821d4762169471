#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. They are deliberately direct and slow.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/image.hpp"
#include "visyreve/meshrender.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"

namespace oracle {

using visyreve::Vec3;

inline visyreve::Pose random_pose(visyreve::Rng& rng, double range_min = 2.0,
                                  double range_max = 10.0) {
  return {visyreve::uniform_rotation(rng),
          Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(range_min, range_max))};
}

/// Moller-Trumbore ray/triangle intersection; returns the ray parameter.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                          const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0) return std::nullopt;
  return t;
}

/// Camera-frame z of the first surface hit by the ray through pixel (x, y),
/// or -1 when the ray misses the mesh.
inline double raycast_depth(const visyreve::TriangleMesh& mesh, const visyreve::Pose& pose,
                            const visyreve::Intrinsics& k, int x, int y) {
  const Vec3 dir((x - k.px) / k.fx, (y - k.py) / k.fy, 1.0);  // z = 1 ray in camera frame
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    const auto hit = ray_triangle(Vec3::Zero(), dir, pose.transform(mesh.vertices[t[0]]),
                                  pose.transform(mesh.vertices[t[1]]),
                                  pose.transform(mesh.vertices[t[2]]));
    if (hit && *hit < best) best = *hit;
  }
  return std::isfinite(best) ? best : -1.0;
}

/// Bilinear sample of a masked gray image at (u, v); nullopt when any of the
/// four taps lies outside the image or outside `mask`.
inline std::optional<double> bilinear_inside(const visyreve::Image& img,
                                             const visyreve::Mask& mask, double u, double v) {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double a = u - x0;
  const double b = v - y0;
  double value = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const int x = x0 + i;
      const int y = y0 + j;
      if (x < 0 || y < 0 || x >= img.width || y >= img.height || !mask.at(x, y)) {
        return std::nullopt;
      }
      value += (i ? a : 1 - a) * (j ? b : 1 - b) * img.at(x, y);
    }
  }
  return value;
}

/// Affine pixel map of a rotation by `angle` about the boresight with
/// fx == fy: target pixel -> source pixel is the in-plane rotation by -angle
/// about the principal point.
inline void boresight_affine(const visyreve::Intrinsics& k, double angle, double xt, double yt,
                             double& xs, double& ys) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = xt - k.px;
  const double dy = yt - k.py;
  xs = k.px + c * dx + s * dy;
  ys = k.py - s * dx + c * dy;
}

/// SSIM evaluated window by window with an explicit 2D Gaussian.
inline double direct_ssim(const visyreve::Image& a, const visyreve::Image& b) {
  constexpr int n = 11;
  double w[n][n];
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dx = i - 5, dy = j - 5;
      w[j][i] = std::exp(-(dx * dx + dy * dy) / (2 * 1.5 * 1.5));
      total += w[j][i];
    }
  }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y + n <= a.height; ++y) {
      for (int x = 0; x + n <= a.width; ++x) {
        double mx = 0, my = 0;
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            mx += w[j][i] / total * a.at(x + i, y + j, c);
            my += w[j][i] / total * b.at(x + i, y + j, c);
          }
        }
        double vx = 0, vy = 0, cov = 0;
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            const double da = a.at(x + i, y + j, c) - mx;
            const double db = b.at(x + i, y + j, c) - my;
            vx += w[j][i] / total * da * da;
            vy += w[j][i] / total * db * db;
            cov += w[j][i] / total * da * db;
          }
        }
        sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return sum / count;
}

/// BDD written out from the definition with rotation matrices instead of
/// quaternion algebra: the relative rotation R1 R2^T, its angle from the
/// trace and its axis from the skew part.
inline double bdd_from_matrices(const visyreve::Quaternion& q1, const visyreve::Quaternion& q2) {
  const visyreve::Mat3 r = q1.to_matrix() * q2.to_matrix().transpose();
  const Eigen::AngleAxisd aa(r);
  const double theta = aa.angle();
  if (theta < 1e-9) return 0.0;
  const Vec3 axis = aa.axis();
  const double phi = std::atan2(std::hypot(axis.x(), axis.y()), std::abs(axis.z()));
  return theta / std::numbers::pi * (1.0 - std::abs(2.0 * phi / std::numbers::pi - 1.0));
}

}  // namespace oracle
