#pragma once

// Procedural textured scenes with exact ground truth, used as a stand-in for
// real pose-labeled datasets.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/meshrender.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/synthesis.hpp"

namespace visyreve {

enum class SceneKind {
  /// 1 m cube centered on the origin.
  Cube,
  /// 2 m x 2 m square in the target z = 0 plane.
  Plane,
  /// 1 m cube plus a 0.5 m box offset diagonally from it.
  TwoBoxes,
};

SceneKind parse_scene_kind(std::string_view name);
std::string_view scene_kind_name(SceneKind kind);

struct SceneSpec {
  SceneKind kind = SceneKind::Cube;
  std::uint64_t texture_seed = 1;
};

/// A mesh with a deterministic gray-level appearance: each face gets a flat
/// shade from a seeded light direction, modulated by a smooth seeded solid
/// texture so that warps are visible inside faces.
class SyntheticScene {
 public:
  explicit SyntheticScene(const SceneSpec& spec);

  const SceneSpec& spec() const { return spec_; }
  const TriangleMesh& mesh() const { return mesh_; }
  /// Box corners.
  const KeypointSet& keypoints() const { return keypoints_; }

  /// Gray level of the surface point `p` (target frame) on `triangle`.
  double intensity(int triangle, const Vec3& p) const;

  /// Ground-truth view: the image is rendered at `supersample` times the
  /// resolution and box-filtered down; mask and depth are rendered at 1x.
  View render(const Pose& pose, const Intrinsics& k, int supersample = 2) const;

 private:
  struct Wave {
    Vec3 direction;  // spatial frequency vector, rad / m
    double phase;
  };

  SceneSpec spec_;
  TriangleMesh mesh_;
  KeypointSet keypoints_;
  std::vector<double> face_base_;  // per triangle
  std::vector<Wave> waves_;
};

struct PoseSamplerConfig {
  enum class Attitudes { Uniform, BlueNoise };

  Attitudes attitudes = Attitudes::Uniform;
  /// Best-of-N candidates per pose for blue-noise attitudes.
  std::size_t blue_noise_candidates = 16;
  /// ||t|| is drawn uniformly from [range_min, range_max].
  double range_min = 5.0;
  double range_max = 5.0;
  /// t_x and t_y are drawn uniformly from +-lateral * range.
  double lateral = 0.0;
  /// Attitudes within BDD < hole_radius of hole_center are rejected.
  std::optional<Quaternion> hole_center;
  double hole_radius = 0.0;
  std::uint64_t seed = 1;
};

/// Throws InvalidArgument for inconsistent ranges and
/// RejectionBudgetExhausted if the hole leaves no room.
std::vector<Pose> sample_poses(std::size_t n, const PoseSamplerConfig& config);

}  // namespace visyreve
