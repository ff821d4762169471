#include "visyreve/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/runinfo.hpp"

namespace visyreve {

void KeypointSet::validate() const {
  if (points_3d.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "a keypoint set needs at least 4 points");
  }
  if (!names.empty() && names.size() != points_3d.size()) {
    throw Error(ErrorCode::InvalidArgument, "keypoint names and points differ in count");
  }
}

std::vector<ImagePoint> KeypointSet::project(const Pose& pose, const Intrinsics& k) const {
  std::vector<ImagePoint> out;
  out.reserve(points_3d.size());
  for (const Vec3& p : points_3d) out.push_back(visyreve::project(p, pose, k));
  return out;
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Mean SSIM of one channel over the region [x0, x0+w) x [y0, y0+h).
double ssim_channel(const Image& a, const Image& b, int c, int x0, int y0, int w, int h) {
  static const std::array<double, kWindow> g = gaussian_taps();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  // horizontal pass: five moment images of width ow, height h
  std::vector<double> hx(std::size_t(ow) * h), hy(hx.size()), hxx(hx.size()), hyy(hx.size()),
      hxy(hx.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < kWindow; ++i) {
        const double va = a.at(x0 + x + i, y0 + y, c);
        const double vb = b.at(x0 + x + i, y0 + y, c);
        sx += g[i] * va;
        sy += g[i] * vb;
        sxx += g[i] * va * va;
        syy += g[i] * vb * vb;
        sxy += g[i] * va * vb;
      }
      const std::size_t j = std::size_t(y) * ow + x;
      hx[j] = sx;
      hy[j] = sy;
      hxx[j] = sxx;
      hyy[j] = syy;
      hxy[j] = sxy;
    }
  }
  double total = 0.0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
      for (int i = 0; i < kWindow; ++i) {
        const std::size_t j = std::size_t(y + i) * ow + x;
        mx += g[i] * hx[j];
        my += g[i] * hy[j];
        exx += g[i] * hxx[j];
        eyy += g[i] * hyy[j];
        exy += g[i] * hxy[j];
      }
      const double vx = exx - mx * mx;
      const double vy = eyy - my * my;
      const double cxy = exy - mx * my;
      total += ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
  }
  return total / (double(ow) * oh);
}

double ssim_region(const Image& a, const Image& b, int x0, int y0, int w, int h) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw Error(ErrorCode::InvalidArgument, "SSIM needs images of equal size and channels");
  }
  if (w < kWindow || h < kWindow) {
    throw Error(ErrorCode::InvalidArgument, "SSIM region is smaller than the 11x11 window");
  }
  double sum = 0.0;
  for (int c = 0; c < a.channels; ++c) sum += ssim_channel(a, b, c, x0, y0, w, h);
  return sum / a.channels;
}

// Grows [lo, hi] to at least kWindow samples within [0, size).
void grow(int& lo, int& hi, int size) {
  while (hi - lo + 1 < kWindow && (lo > 0 || hi < size - 1)) {
    if (lo > 0) --lo;
    if (hi - lo + 1 < kWindow && hi < size - 1) ++hi;
  }
}

}  // namespace

double ssim(const Image& a, const Image& b) { return ssim_region(a, b, 0, 0, a.width, a.height); }

double ssim_bbox(const Image& synth, const Image& actual, const Mask& mask_actual) {
  if (mask_actual.width != actual.width || mask_actual.height != actual.height) {
    throw Error(ErrorCode::InvalidArgument, "mask and image dimensions differ");
  }
  int x0 = mask_actual.width, x1 = -1, y0 = mask_actual.height, y1 = -1;
  for (int y = 0; y < mask_actual.height; ++y) {
    for (int x = 0; x < mask_actual.width; ++x) {
      if (!mask_actual.at(x, y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw Error(ErrorCode::EmptyMask, "SSIM crop mask is empty");
  grow(x0, x1, mask_actual.width);
  grow(y0, y1, mask_actual.height);
  return ssim_region(synth, actual, x0, y0, x1 - x0 + 1, y1 - y0 + 1);
}

double iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::InvalidArgument, "IoU needs masks of equal size");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    inter += a.values[i] & b.values[i];
    uni += a.values[i] | b.values[i];
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

namespace {

void check_in_view(const std::vector<ImagePoint>& pts, const Intrinsics& k) {
  for (const ImagePoint& p : pts) {
    if (!(p.u >= -0.5 && p.v >= -0.5 && p.u < k.width - 0.5 && p.v < k.height - 0.5)) {
      throw Error(ErrorCode::KeypointOutOfView,
                  fmt::format("keypoint ({}, {}) is outside the source image", p.u, p.v));
    }
  }
}

void check_counts(std::size_t detected, const KeypointSet& kps) {
  if (detected != kps.size()) {
    throw Error(ErrorCode::CountMismatch,
                fmt::format("{} detections for {} keypoints", detected, kps.size()));
  }
  if (detected == 0) throw Error(ErrorCode::CountMismatch, "no keypoints to compare");
}

}  // namespace

std::vector<ImagePoint> oracle_keypoints(const SynthesisResult& result, const KeypointSet& kps,
                                         const View& source) {
  std::vector<ImagePoint> in_source;
  try {
    in_source = kps.project(source.pose, source.intrinsics);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PointBehindCamera) throw;
    throw Error(ErrorCode::KeypointOutOfView, "keypoint behind the source camera");
  }
  check_in_view(in_source, source.intrinsics);
  if (!result.transformed_keypoints) {
    throw Error(ErrorCode::CountMismatch, "synthesis carried no keypoints");
  }
  check_counts(result.transformed_keypoints->size(), kps);
  return *result.transformed_keypoints;
}

double kps_l2(const std::vector<ImagePoint>& detected, const Pose& ground_truth,
              const Intrinsics& k, const KeypointSet& kps) {
  check_counts(detected.size(), kps);
  double total = 0.0;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    const ImagePoint u = project(kps.points_3d[i], ground_truth, k);
    total += std::hypot(detected[i].u - u.u, detected[i].v - u.v);
  }
  return total / double(detected.size());
}

double kps_vbn(const std::vector<ImagePoint>& detected, const Pose& ground_truth,
               const Intrinsics& k, const KeypointSet& kps) {
  check_counts(detected.size(), kps);
  const Pose inv = ground_truth.inverse();
  double total = 0.0;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    const Vec3& x = kps.points_3d[i];
    const double z = ground_truth.transform(x).z();
    const Vec3 x_hat = inv.transform(backproject(detected[i], z, k));
    total += (x_hat - x).norm();
  }
  return total / double(detected.size()) / ground_truth.range();
}

QualityReport evaluate_pair(const View& source, const View& target, Method method,
                            const TriangleMesh* mesh, const KeypointSet& kps, double spec_weight,
                            const SynthesisOptions& options, DepthRenderer* renderer,
                            SynthesisTiming* timing) {
  kps.validate();
  View src = source;
  try {
    src.keypoints_2d = kps.project(source.pose, source.intrinsics);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PointBehindCamera) throw;
    throw Error(ErrorCode::KeypointOutOfView, "keypoint behind the source camera");
  }
  const SynthesisResult result = synthesize(method, src, target.pose, mesh, options, renderer);
  if (timing) *timing = result.timing;

  Mask actual_mask;
  if (target.mask) {
    actual_mask = *target.mask;
  } else if (mesh) {
    DepthRenderer local;
    DepthRenderer& r = renderer ? *renderer : local;
    actual_mask = mask_from_depth(r.render(*mesh, target.pose, target.intrinsics));
  } else {
    throw Error(ErrorCode::MissingMesh, "target has no mask and no mesh to render one");
  }

  return score_synthesis(result, src, target, actual_mask, kps, spec_weight);
}

QualityReport score_synthesis(const SynthesisResult& result, const View& source,
                              const View& target, const Mask& actual_mask,
                              const KeypointSet& kps, double spec_weight) {
  QualityReport q;
  q.ssim = ssim_bbox(result.image, target.image, actual_mask);
  q.iou = iou(result.transformed_mask, actual_mask);
  const std::vector<ImagePoint> detected = oracle_keypoints(result, kps, source);
  q.kps_l2 = kps_l2(detected, target.pose, target.intrinsics, kps);
  q.kps_vbn = kps_vbn(detected, target.pose, target.intrinsics, kps);
  q.num_keypoints = kps.size();
  q.bdd = bdd_value(source.pose.rotation, target.pose.rotation);
  q.cl2 = cl2(source.pose, target.pose);
  q.rot_mag = rotation_magnitude(source.pose, target.pose);
  q.spec = spec_combined(source.pose, target.pose, spec_weight);
  return q;
}

std::string quality_csv_header() { return "ssim,iou,kps_l2,kps_vbn,num_keypoints,bdd,cl2,rotmag,spec"; }

std::string quality_csv_row(const QualityReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", format_double(r.ssim), format_double(r.iou),
                     format_double(r.kps_l2), format_double(r.kps_vbn), r.num_keypoints,
                     format_double(r.bdd), format_double(r.cl2), format_double(r.rot_mag),
                     format_double(r.spec));
}

}  // namespace visyreve
