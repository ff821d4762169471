#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/image.hpp"

namespace visyreve {

struct TriangleMesh {
  std::vector<Vec3> vertices;  // target frame, meters
  std::vector<std::array<int, 3>> triangles;

  /// Throws InvalidArgument on out-of-range indices, NaN vertices or an
  /// empty triangle list.
  void validate() const;
};

/// Reads `v` and `f` records; faces are fan-triangulated and negative
/// (relative) indices resolved. Everything else (vt, vn, materials, groups)
/// is ignored. Throws ParseError naming the offending line.
TriangleMesh load_obj(const std::filesystem::path& path);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Metric camera-frame z per pixel; kInvalid marks pixels with no surface.
struct DepthMap {
  static constexpr float kInvalid = -1.0f;

  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), values(std::size_t(w) * h, kInvalid) {}

  float at(int x, int y) const { return values[std::size_t(y) * width + x]; }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
  std::size_t valid_count() const;
};

/// Raw float32 file: u32 width, u32 height (little endian), then row-major
/// little-endian float32 values.
void save_depth(const DepthMap& depth, const std::filesystem::path& path);
DepthMap load_depth(const std::filesystem::path& path);

Mask mask_from_depth(const DepthMap& depth);

/// Z-buffered software rasterizer producing metric depth.
///
/// A pixel is covered when its center lies inside the projected triangle;
/// pixels on an edge shared by two triangles belong to exactly one of them.
/// Depth is interpolated perspective-correctly (linear in 1/z), triangles are
/// clipped against a near plane and no back-face culling is applied.
///
/// The renderer owns its scratch buffers; use one instance per thread.
class DepthRenderer {
 public:
  static constexpr double kNearPlane = 1e-4;

  /// Throws DegenerateIntrinsics for invalid intrinsics and InvalidArgument
  /// for an invalid mesh.
  const DepthMap& render(const TriangleMesh& mesh, const Pose& pose, const Intrinsics& k);

  /// Index of the triangle seen at each pixel of the last render, -1 if none.
  const std::vector<std::int32_t>& triangle_ids() const { return ids_; }
  const DepthMap& depth() const { return depth_; }

 private:
  struct ScreenVertex {
    double x, y, inv_z;
  };
  void raster(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c,
              std::int32_t id);

  DepthMap depth_;
  std::vector<double> zbuffer_;
  std::vector<std::int32_t> ids_;
};

DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const Intrinsics& k);

}  // namespace visyreve
