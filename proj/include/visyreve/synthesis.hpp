#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/image.hpp"
#include "visyreve/meshrender.hpp"
#include "visyreve/nnindex.hpp"

namespace visyreve {

/// An image with its camera pose, the unit of synthesis.
struct View {
  Image image;
  Pose pose;
  Intrinsics intrinsics;
  std::optional<Mask> mask;
  std::optional<DepthMap> depth;
  /// Points to carry through the synthesis (usually projected 3D keypoints).
  std::optional<std::vector<ImagePoint>> keypoints_2d;

  /// Throws InvalidArgument when the image is empty or a mask/depth size
  /// disagrees with the intrinsics.
  void validate() const;
};

enum class PixelState : std::uint8_t {
  Background = 0,
  Transformed = 1,
  Interpolated = 2,
  /// Eligible for interpolation but left empty.
  Gap = 3,
};

struct ValidMap {
  int width = 0;
  int height = 0;
  std::vector<PixelState> states;

  ValidMap() = default;
  ValidMap(int w, int h) : width(w), height(h), states(std::size_t(w) * h, PixelState::Background) {}
  PixelState at(int x, int y) const { return states[std::size_t(y) * width + x]; }
  std::size_t count(PixelState s) const;
};

/// RGB rendering of a valid map: background black, transformed white,
/// interpolated blue (0,128,255), gap red (255,0,0).
Image valid_map_image(const ValidMap& map);

/// Wall-clock seconds.
struct SynthesisTiming {
  double render = 0.0;
  double warp = 0.0;
  double interpolate = 0.0;
  double total = 0.0;
};

struct SynthesisResult {
  Image image;
  Mask transformed_mask;
  std::optional<std::vector<ImagePoint>> transformed_keypoints;
  ValidMap valid_map;
  SynthesisTiming timing;
};

enum class Method { Homography, Transform3d };

/// "homography" (or "hom") and "3dt".
Method parse_method(std::string_view name);
std::string_view method_name(Method m);

struct SynthesisOptions {
  /// Homography only: render the source depth map from the mesh and use its
  /// silhouette as the input mask.
  bool mask_with_mesh = false;
  /// 3D Transform only: fill gaps from their 5x5 neighborhood.
  bool interpolate = true;
  /// 3D Transform only: treat every pixel covered by the rendered target
  /// depth map as eligible for filling instead of testing the source depth
  /// map at the target coordinates.
  bool fill_target_object = false;
};

/// G = K (R12 + t12 n^T / d) K^-1 for the plane z = ||t_S|| in the source
/// camera, mapping source pixels to target pixels.
/// Throws ZeroRange when ||t_S|| < 1e-9 and SingularHomography when
/// |det G| < 1e-12.
Mat3 homography_matrix(const Pose& source, const Pose& target, const Intrinsics& k);

/// Inverse-mapped bilinear warp of the (masked) source image by G. A target
/// pixel counts as transformed when the bilinearly sampled source mask is at
/// least 0.5.
SynthesisResult homography_transform(const View& source, const Pose& target_pose,
                                     const TriangleMesh* mesh = nullptr,
                                     const SynthesisOptions& options = {},
                                     DepthRenderer* renderer = nullptr);

/// Forward warp of every source pixel with valid depth to the nearest target
/// pixel; the nearer surface wins collisions, the lower source pixel index
/// wins exact ties. Depth comes from rendering `mesh`, or from source.depth
/// when no mesh is given; throws MissingMesh when neither exists and
/// EmptyOverlap when no pixel lands in the target image.
///
/// Keypoints use the depth at their nearest source pixel, or the nearest
/// valid depth within the 5x5 window around it; KeypointOutOfView otherwise.
SynthesisResult transform_3d(const View& source, const Pose& target_pose,
                             const TriangleMesh* mesh, const SynthesisOptions& options = {},
                             DepthRenderer* renderer = nullptr);

SynthesisResult synthesize(Method method, const View& source, const Pose& target_pose,
                           const TriangleMesh* mesh, const SynthesisOptions& options = {},
                           DepthRenderer* renderer = nullptr);

/// Id of the BDD nearest neighbor of `target_pose`; ties go to the smaller
/// C-L2, then the smaller id. Throws InvalidArgument for non-BDD indexes.
std::string select_source(const PoseIndex& index, const Pose& target_pose);

}  // namespace visyreve
