#include "visyreve/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "visyreve/error.hpp"

namespace visyreve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

// Sample coordinates within this distance of an integer are treated as exact
// grid positions, so an identity warp copies pixels bit-for-bit.
constexpr double kSnap = 1e-9;

// |s| < 2^30; rounds without a libm call
double snap(double s) {
  const double r = static_cast<double>(static_cast<long long>(s + (s < 0.0 ? -0.5 : 0.5)));
  return std::abs(s - r) < kSnap ? r : s;
}

}  // namespace

void View::validate() const {
  intrinsics.validate();
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "source image is empty");
  if (image.width != intrinsics.width || image.height != intrinsics.height) {
    throw Error(ErrorCode::InvalidArgument, "image size differs from the intrinsics");
  }
  if (mask && (mask->width != image.width || mask->height != image.height)) {
    throw Error(ErrorCode::InvalidArgument, "mask size differs from the image");
  }
  if (depth && (depth->width != image.width || depth->height != image.height)) {
    throw Error(ErrorCode::InvalidArgument, "depth size differs from the image");
  }
}

std::size_t ValidMap::count(PixelState s) const {
  return static_cast<std::size_t>(std::count(states.begin(), states.end(), s));
}

Image valid_map_image(const ValidMap& map) {
  Image out(map.width, map.height, 3);
  for (std::size_t i = 0; i < map.states.size(); ++i) {
    std::uint8_t r = 0, g = 0, b = 0;
    switch (map.states[i]) {
      case PixelState::Background: break;
      case PixelState::Transformed: r = g = b = 255; break;
      case PixelState::Interpolated: g = 128; b = 255; break;
      case PixelState::Gap: r = 255; break;
    }
    out.data[3 * i] = r;
    out.data[3 * i + 1] = g;
    out.data[3 * i + 2] = b;
  }
  return out;
}

Method parse_method(std::string_view name) {
  if (name == "homography" || name == "hom") return Method::Homography;
  if (name == "3dt") return Method::Transform3d;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) {
  return m == Method::Homography ? "homography" : "3dt";
}

Mat3 homography_matrix(const Pose& source, const Pose& target, const Intrinsics& k) {
  const double d = source.translation.norm();
  if (!(d >= 1e-9)) throw Error(ErrorCode::ZeroRange, "source range is below 1e-9 m");
  const Pose rel = relative_pose(source, target);
  const Vec3 n(0.0, 0.0, 1.0);
  const Mat3 h = rel.rotation_matrix() + rel.translation * n.transpose() / d;
  const Mat3 g = k.matrix() * h * k.inverse_matrix();
  const double det = g.determinant();
  if (!(std::abs(det) >= 1e-12)) {
    throw Error(ErrorCode::SingularHomography, "homography determinant is " + std::to_string(det));
  }
  return g;
}

SynthesisResult homography_transform(const View& source, const Pose& target_pose,
                                     const TriangleMesh* mesh, const SynthesisOptions& options,
                                     DepthRenderer* renderer) {
  const auto start = Clock::now();
  source.validate();
  const Intrinsics& k = source.intrinsics;
  const Mat3 g = homography_matrix(source.pose, target_pose, k);

  SynthesisResult result;
  const Mask* mask = source.mask ? &*source.mask : nullptr;
  Mask rendered;
  if (options.mask_with_mesh) {
    if (!mesh) throw Error(ErrorCode::MissingMesh, "masking with the mesh needs a mesh");
    const auto t0 = Clock::now();
    DepthRenderer local;
    DepthRenderer& r = renderer ? *renderer : local;
    rendered = mask_from_depth(r.render(*mesh, source.pose, k));
    mask = &rendered;
    result.timing.render = seconds_since(t0);
  }

  const auto t_warp = Clock::now();
  const int w = k.width;
  const int h = k.height;
  const int ch = source.image.channels;
  const std::uint8_t* src = source.image.data.data();
  const std::uint8_t* msk = mask ? mask->values.data() : nullptr;
  result.image = Image(w, h, ch);
  result.transformed_mask = Mask(w, h);
  result.valid_map = ValidMap(w, h);
  std::uint8_t* dst = result.image.data.data();

  // the mask applied to the source also zeroes its pixels before sampling
  auto weight_at = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return msk ? double(msk[std::size_t(y) * w + x]) : 1.0;
  };

  const Mat3 gi = g.inverse();
  const double g00 = gi(0, 0), g10 = gi(1, 0), g20 = gi(2, 0);
  double acc[4];
  for (int y = 0; y < h; ++y) {
    double hx = gi(0, 1) * y + gi(0, 2);
    double hy = gi(1, 1) * y + gi(1, 2);
    double hw = gi(2, 1) * y + gi(2, 2);
    for (int x = 0; x < w; ++x, hx += g00, hy += g10, hw += g20) {
      if (!(hw > 0.0)) continue;
      double u = hx / hw;
      double v = hy / hw;
      if (!(u > -2.0 && v > -2.0 && u < w + 1.0 && v < h + 1.0)) continue;
      u = snap(u);
      v = snap(v);
      if (!(u > -1.0 && v > -1.0 && u < w && v < h)) continue;
      // u, v > -1: truncation of u + 1 is the floor plus one
      const int x0 = static_cast<int>(u + 1.0) - 1;
      const int y0 = static_cast<int>(v + 1.0) - 1;
      const double a = u - x0;
      const double b = v - y0;
      const double wts[4] = {(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
      const std::size_t idx = std::size_t(y) * w + x;
      double coverage = 0.0;
      if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
        const std::size_t s00 = std::size_t(y0) * w + x0;
        const std::size_t taps[4] = {s00, s00 + 1, s00 + w, s00 + w + 1};
        double m[4] = {1.0, 1.0, 1.0, 1.0};
        if (msk) {
          if (!(msk[taps[0]] | msk[taps[1]] | msk[taps[2]] | msk[taps[3]])) continue;
          for (int i = 0; i < 4; ++i) m[i] = msk[taps[i]];
        }
        if (ch == 1) {
          double sum = 0.0;
          for (int i = 0; i < 4; ++i) {
            coverage += wts[i] * m[i];
            sum += wts[i] * m[i] * src[taps[i]];
          }
          if (coverage == 0.0) continue;
          dst[idx] = to_byte(sum);
        } else {
          std::fill_n(acc, ch, 0.0);
          for (int i = 0; i < 4; ++i) {
            const double wi = wts[i] * m[i];
            coverage += wi;
            for (int c = 0; c < ch; ++c) acc[c] += wi * src[taps[i] * ch + c];
          }
          if (coverage == 0.0) continue;
          for (int c = 0; c < ch; ++c) dst[idx * ch + c] = to_byte(acc[c]);
        }
      } else {
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
        std::fill_n(acc, ch, 0.0);
        for (int i = 0; i < 4; ++i) {
          if (wts[i] == 0.0) continue;
          const double m = weight_at(xs[i], ys[i]);
          if (m == 0.0) continue;
          coverage += wts[i];
          const std::uint8_t* p = src + (std::size_t(ys[i]) * w + xs[i]) * ch;
          for (int c = 0; c < ch; ++c) acc[c] += wts[i] * p[c];
        }
        if (coverage == 0.0) continue;
        for (int c = 0; c < ch; ++c) dst[idx * ch + c] = to_byte(acc[c]);
      }
      if (coverage >= 0.5) {
        result.transformed_mask.values[idx] = 1;
        result.valid_map.states[idx] = PixelState::Transformed;
      }
    }
  }
  result.timing.warp = seconds_since(t_warp);

  if (source.keypoints_2d) {
    std::vector<ImagePoint> out;
    out.reserve(source.keypoints_2d->size());
    for (const ImagePoint& p : *source.keypoints_2d) {
      const Vec3 q = g * Vec3(p.u, p.v, 1.0);
      if (!(q.z() > 1e-12)) {
        throw Error(ErrorCode::KeypointOutOfView, "keypoint maps behind the target camera");
      }
      out.push_back({q.x() / q.z(), q.y() / q.z()});
    }
    result.transformed_keypoints = std::move(out);
  }
  result.timing.total = seconds_since(start);
  return result;
}

namespace {

// Depth for a keypoint: nearest pixel if valid, else the nearest valid pixel
// within the 5x5 window around it.
double keypoint_depth(const DepthMap& depth, const ImagePoint& p) {
  const int cx = static_cast<int>(std::lround(p.u));
  const int cy = static_cast<int>(std::lround(p.v));
  double best = -1.0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      if (x < 0 || y < 0 || x >= depth.width || y >= depth.height || !depth.valid(x, y)) continue;
      const double d2 = (x - p.u) * (x - p.u) + (y - p.v) * (y - p.v);
      const bool center = dx == 0 && dy == 0;
      if (center) return depth.at(x, y);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = depth.at(x, y);
      }
    }
  }
  if (best <= 0.0) {
    throw Error(ErrorCode::KeypointOutOfView, "no valid depth near keypoint (" +
                                                  std::to_string(p.u) + ", " +
                                                  std::to_string(p.v) + ")");
  }
  return best;
}

}  // namespace

SynthesisResult transform_3d(const View& source, const Pose& target_pose,
                             const TriangleMesh* mesh, const SynthesisOptions& options,
                             DepthRenderer* renderer) {
  const auto start = Clock::now();
  source.validate();
  const Intrinsics& k = source.intrinsics;
  const int w = k.width;
  const int h = k.height;
  const std::size_t n = std::size_t(w) * h;

  SynthesisResult result;
  DepthRenderer local;
  DepthRenderer& r = renderer ? *renderer : local;
  DepthMap source_depth;
  std::vector<std::uint8_t> target_object;
  {
    const auto t0 = Clock::now();
    if (mesh) {
      source_depth = r.render(*mesh, source.pose, k);
    } else if (source.depth) {
      source_depth = *source.depth;
    } else {
      throw Error(ErrorCode::MissingMesh, "3D transform needs a mesh or a source depth map");
    }
    if (options.interpolate && options.fill_target_object) {
      if (!mesh) throw Error(ErrorCode::MissingMesh, "filling the target object needs a mesh");
      const DepthMap& td = r.render(*mesh, target_pose, k);
      target_object.resize(n);
      for (std::size_t i = 0; i < n; ++i) target_object[i] = td.values[i] > 0.0f;
    }
    result.timing.render = seconds_since(t0);
  }

  const auto t_warp = Clock::now();
  const Pose rel = relative_pose(source.pose, target_pose);
  const Mat3 rot = rel.rotation_matrix();
  const Vec3 tr = rel.translation;
  // target-frame ray direction of source pixel (x, y) is row + x * col
  const Mat3 m = rot * k.inverse_matrix();
  const Vec3 col = m.col(0);

  const int ch = source.image.channels;
  const std::uint8_t* src = source.image.data.data();
  const std::uint8_t* msk = source.mask ? source.mask->values.data() : nullptr;
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> origin(n, -1);
  std::size_t landed = 0;

  for (int y = 0; y < h; ++y) {
    const Vec3 row = m.col(1) * y + m.col(2);
    for (int x = 0; x < w; ++x) {
      const std::size_t si = std::size_t(y) * w + x;
      const float d = source_depth.values[si];
      if (!(d > 0.0f) || (msk && !msk[si])) continue;
      const Vec3 p = double(d) * (row + x * col) + tr;
      if (!(p.z() > DepthRenderer::kNearPlane)) continue;
      const double u = k.fx * p.x() / p.z() + k.px;
      const double v = k.fy * p.y() / p.z() + k.py;
      if (!(u > -0.5 && v > -0.5 && u < w - 0.5 && v < h - 0.5)) continue;
      const int tx = static_cast<int>(std::lround(u));
      const int ty = static_cast<int>(std::lround(v));
      if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
      const std::size_t ti = std::size_t(ty) * w + tx;
      ++landed;
      // strict comparison: on an exact z tie the earlier source pixel stays
      if (p.z() < zbuf[ti]) {
        zbuf[ti] = p.z();
        origin[ti] = static_cast<std::int64_t>(si);
      }
    }
  }
  if (landed == 0) {
    throw Error(ErrorCode::EmptyOverlap, "no source pixel lands in the target image");
  }

  result.image = Image(w, h, ch);
  result.transformed_mask = Mask(w, h);
  result.valid_map = ValidMap(w, h);
  std::uint8_t* dst = result.image.data.data();
  for (std::size_t ti = 0; ti < n; ++ti) {
    if (origin[ti] < 0) continue;
    std::copy_n(src + std::size_t(origin[ti]) * ch, ch, dst + ti * ch);
    result.valid_map.states[ti] = PixelState::Transformed;
    result.transformed_mask.values[ti] = 1;
  }
  result.timing.warp = seconds_since(t_warp);

  const auto t_interp = Clock::now();
  const std::vector<std::uint8_t>* eligible_target = target_object.empty() ? nullptr : &target_object;
  auto eligible = [&](std::size_t i) {
    return eligible_target ? (*eligible_target)[i] != 0 : source_depth.values[i] > 0.0f;
  };
  if (options.interpolate) {
    // summed-area tables over the transformed pixels: count and per-channel sums
    const int sw = w + 1;
    std::vector<std::uint32_t> cnt(std::size_t(sw) * (h + 1), 0);
    std::vector<std::uint64_t> sum(std::size_t(sw) * (h + 1) * ch, 0);
    for (int y = 0; y < h; ++y) {
      std::uint32_t row_cnt = 0;
      std::uint64_t row_sum[4] = {0, 0, 0, 0};
      for (int x = 0; x < w; ++x) {
        const std::size_t i = std::size_t(y) * w + x;
        if (origin[i] >= 0) {
          ++row_cnt;
          for (int c = 0; c < ch; ++c) row_sum[c] += dst[i * ch + c];
        }
        const std::size_t s = std::size_t(y + 1) * sw + x + 1;
        const std::size_t above = std::size_t(y) * sw + x + 1;
        cnt[s] = cnt[above] + row_cnt;
        for (int c = 0; c < ch; ++c) sum[s * ch + c] = sum[above * ch + c] + row_sum[c];
      }
    }
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - 2), y1 = std::min(h, y + 3);
      for (int x = 0; x < w; ++x) {
        const std::size_t i = std::size_t(y) * w + x;
        if (origin[i] >= 0 || !eligible(i)) continue;
        const int x0 = std::max(0, x - 2), x1 = std::min(w, x + 3);
        const std::size_t a = std::size_t(y0) * sw + x0, b = std::size_t(y0) * sw + x1;
        const std::size_t c0 = std::size_t(y1) * sw + x0, d0 = std::size_t(y1) * sw + x1;
        const std::uint32_t count = cnt[d0] - cnt[b] - cnt[c0] + cnt[a];
        if (count == 0) {
          result.valid_map.states[i] = PixelState::Gap;
          continue;
        }
        for (int c = 0; c < ch; ++c) {
          const std::uint64_t s =
              sum[d0 * ch + c] - sum[b * ch + c] - sum[c0 * ch + c] + sum[a * ch + c];
          dst[i * ch + c] = to_byte(double(s) / count);
        }
        result.valid_map.states[i] = PixelState::Interpolated;
        result.transformed_mask.values[i] = 1;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (origin[i] < 0 && eligible(i)) result.valid_map.states[i] = PixelState::Gap;
    }
  }
  result.timing.interpolate = seconds_since(t_interp);

  if (source.keypoints_2d) {
    std::vector<ImagePoint> out;
    out.reserve(source.keypoints_2d->size());
    for (const ImagePoint& p : *source.keypoints_2d) {
      const double d = keypoint_depth(source_depth, p);
      const Vec3 q = rel.transform(backproject(p, d, k));
      if (!(q.z() > 1e-12)) {
        throw Error(ErrorCode::KeypointOutOfView, "keypoint maps behind the target camera");
      }
      out.push_back(project_camera_point(q, k));
    }
    result.transformed_keypoints = std::move(out);
  }
  result.timing.total = seconds_since(start);
  return result;
}

SynthesisResult synthesize(Method method, const View& source, const Pose& target_pose,
                           const TriangleMesh* mesh, const SynthesisOptions& options,
                           DepthRenderer* renderer) {
  if (method == Method::Homography) {
    return homography_transform(source, target_pose, mesh, options, renderer);
  }
  return transform_3d(source, target_pose, mesh, options, renderer);
}

std::string select_source(const PoseIndex& index, const Pose& target_pose) {
  if (index.metric().type() != DistanceKind::Type::Bdd) {
    throw Error(ErrorCode::InvalidArgument, "source selection needs a BDD index");
  }
  return index.nearest(target_pose, 1).front().id;
}

}  // namespace visyreve
