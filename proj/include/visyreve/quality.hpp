#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/image.hpp"
#include "visyreve/meshrender.hpp"
#include "visyreve/synthesis.hpp"

namespace visyreve {

/// Landmarks on the target model.
struct KeypointSet {
  std::vector<Vec3> points_3d;  // target frame, meters
  std::vector<std::string> names;

  std::size_t size() const { return points_3d.size(); }
  /// Throws InvalidArgument for fewer than 4 points or a name count that
  /// differs from the point count (an empty name list is allowed).
  void validate() const;
  /// Ground-truth pixel locations u_i.
  std::vector<ImagePoint> project(const Pose& pose, const Intrinsics& k) const;
};

struct QualityReport {
  double ssim = 0.0;
  double iou = 0.0;
  double kps_l2 = 0.0;   // pixels
  double kps_vbn = 0.0;  // mean 3D error / range
  std::size_t num_keypoints = 0;
  double bdd = 0.0;
  double cl2 = 0.0;
  double rot_mag = 0.0;
  double spec = 0.0;
};

/// Mean SSIM over the tight bounding box of `mask_actual` (grown symmetrically
/// to at least 11x11 where the image allows). Gaussian 11x11 window, sigma
/// 1.5, K1 = 0.01, K2 = 0.03, L = 255; only windows fully inside the crop are
/// used. RGB images are averaged over channels. Throws EmptyMask.
double ssim_bbox(const Image& synth, const Image& actual, const Mask& mask_actual);

/// Mean SSIM over all valid 11x11 windows of two equally sized images.
double ssim(const Image& a, const Image& b);

/// |a & b| / |a | b|, 1 when both are empty.
double iou(const Mask& a, const Mask& b);

/// The keypoints carried through the synthesis stand in for a detector.
/// Throws KeypointOutOfView if a keypoint does not project inside the source
/// view, CountMismatch if the result carries a different number of points.
std::vector<ImagePoint> oracle_keypoints(const SynthesisResult& result, const KeypointSet& kps,
                                         const View& source);

/// Mean reprojection error in pixels. Throws CountMismatch.
double kps_l2(const std::vector<ImagePoint>& detected, const Pose& ground_truth,
              const Intrinsics& k, const KeypointSet& kps);

/// Mean 3D error of the detections back-projected at the ground-truth
/// camera-frame depth of each keypoint, divided by ||t||.
/// Throws CountMismatch or NonPositiveDepth.
double kps_vbn(const std::vector<ImagePoint>& detected, const Pose& ground_truth,
               const Intrinsics& k, const KeypointSet& kps);

/// Scores a synthesis of `target` from `source` (which must carry the
/// projected keypoints) against the target image and `actual_mask`.
QualityReport score_synthesis(const SynthesisResult& result, const View& source,
                              const View& target, const Mask& actual_mask,
                              const KeypointSet& kps, double spec_weight);

/// Synthesizes `target` from `source` and scores the result against the
/// target's image and mask. The target needs a mask, or a mesh to render one.
QualityReport evaluate_pair(const View& source, const View& target, Method method,
                            const TriangleMesh* mesh, const KeypointSet& kps, double spec_weight,
                            const SynthesisOptions& options = {},
                            DepthRenderer* renderer = nullptr,
                            SynthesisTiming* timing = nullptr);

/// CSV columns in order: ssim,iou,kps_l2,kps_vbn,num_keypoints,bdd,cl2,rotmag,spec
std::string quality_csv_header();
std::string quality_csv_row(const QualityReport& r);

}  // namespace visyreve
