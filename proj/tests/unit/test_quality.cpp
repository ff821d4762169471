#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "support/oracles.hpp"
#include "visyreve/density.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/scene.hpp"

using namespace visyreve;

namespace {

const Intrinsics kCam{150, 150, 63.5, 63.5, 128, 128};

const SyntheticScene& cube() {
  static const SyntheticScene scene({SceneKind::Cube, 7});
  return scene;
}

KeypointSet square_keypoints() {
  KeypointSet k;
  k.points_3d = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
  return k;
}

Image gradient(int w, int h, int offset) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(std::min(255, 2 * x + y + offset));
  }
  return img;
}

Image noise(int w, int h, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h, channels);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.index(256));
  return img;
}

Mask rect(int w, int h, int x0, int y0, int x1, int y1) {
  Mask m(w, h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  }
  return m;
}

}  // namespace

TEST_CASE("ssim identical and negated images") {
  const Image a = noise(40, 30, 1, 1);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  Image neg = a;
  for (auto& v : neg.data) v = static_cast<std::uint8_t>(255 - v);
  CHECK(ssim(a, neg) < 0.0);
  const Mask all(40, 30, true);
  CHECK(ssim_bbox(a, a, all) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches the direct windowed oracle") {
  const Image a = gradient(64, 64, 0);
  const Image b = gradient(64, 64, 10);
  const double want = oracle::direct_ssim(a, b);
  CHECK(std::abs(ssim(a, b) - want) < 1e-9);
  for (std::uint64_t seed = 2; seed < 6; ++seed) {
    const Image x = noise(24, 20, seed % 2 ? 3 : 1, seed);
    const Image y = noise(24, 20, seed % 2 ? 3 : 1, seed + 100);
    CHECK(std::abs(ssim(x, y) - oracle::direct_ssim(x, y)) < 1e-9);
    CHECK(std::abs(ssim(x, y) - ssim(y, x)) < 1e-12);
  }
}

TEST_CASE("ssim_bbox crops to the mask and grows small boxes") {
  const Image a = noise(50, 50, 1, 7);
  Image b = a;
  // differences outside the box are ignored
  for (int y = 0; y < 50; ++y) b.at(0, y) = static_cast<std::uint8_t>(255 - a.at(0, y));
  const Mask m = rect(50, 50, 10, 10, 40, 40);
  CHECK(ssim_bbox(b, a, m) == doctest::Approx(1.0).epsilon(1e-12));

  // crop equals the oracle on the cropped images
  const Image c = noise(50, 50, 1, 8);
  Image ca(30, 30, 1), cc(30, 30, 1);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 30; ++x) {
      ca.at(x, y) = a.at(x + 10, y + 10);
      cc.at(x, y) = c.at(x + 10, y + 10);
    }
  }
  CHECK(std::abs(ssim_bbox(c, a, m) - oracle::direct_ssim(cc, ca)) < 1e-9);

  // a single pixel grows to an 11x11 window
  const Mask dot = rect(50, 50, 0, 49, 1, 50);
  CHECK_NOTHROW(ssim_bbox(c, a, dot));
  try {
    ssim_bbox(c, a, Mask(50, 50));
    FAIL("expected EmptyMask");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMask);
  }
}

TEST_CASE("iou") {
  const Mask a = rect(20, 10, 0, 0, 10, 10);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, rect(20, 10, 10, 0, 20, 10)) == 0.0);
  CHECK(iou(a, rect(20, 10, 5, 0, 15, 10)) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(Mask(5, 5), Mask(5, 5)) == 1.0);
  const Mask b = rect(20, 10, 3, 2, 17, 9);
  CHECK(iou(a, b) == iou(b, a));
  // shrinking one argument never increases the overlap ratio beyond the original
  double previous = iou(a, b);
  for (int s = 1; s < 4; ++s) {
    const double v = iou(rect(20, 10, 3 + s, 2 + s, 17 - s, 9 - s), a);
    CHECK(v <= previous);
    previous = v;
  }
}

TEST_CASE("kps_l2") {
  const KeypointSet kps = square_keypoints();
  const Pose pose{Quaternion(), Vec3(0, 0, 5)};
  std::vector<ImagePoint> u = kps.project(pose, kCam);
  CHECK(kps_l2(u, pose, kCam, kps) == 0.0);
  for (auto& p : u) p.u += 3.0;
  CHECK(kps_l2(u, pose, kCam, kps) == doctest::Approx(3.0).epsilon(1e-12));

  Rng rng(3);
  std::vector<ImagePoint> noisy = kps.project(pose, kCam);
  double want = 0;
  for (auto& p : noisy) {
    const double du = rng.uniform(-4, 4), dv = rng.uniform(-4, 4);
    p.u += du;
    p.v += dv;
    want += std::sqrt(du * du + dv * dv);
  }
  CHECK(kps_l2(noisy, pose, kCam, kps) == doctest::Approx(want / 4).epsilon(1e-9));
  u.pop_back();
  try {
    kps_l2(u, pose, kCam, kps);
    FAIL("expected CountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CountMismatch);
  }
}

TEST_CASE("kps_vbn boundary case") {
  // one keypoint on the boresight at 5 m, detected 1 px off with fx = 100:
  // the 3D error is 5 / 100 = 0.05 m, i.e. 1% of the range
  KeypointSet kps;
  kps.points_3d = {Vec3::Zero()};
  const Pose pose{Quaternion(), Vec3(0, 0, 5)};
  const Intrinsics k{100, 100, 50, 50, 100, 100};
  const double ratio = kps_vbn({{51, 50}}, pose, k, kps);
  CHECK(std::abs(ratio - 0.01) < 1e-9);
  CHECK(kps_vbn({{50, 50}}, pose, k, kps) == 0.0);
}

TEST_CASE("kps_vbn matches a direct computation") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    KeypointSet kps;
    for (int i = 0; i < 6; ++i) kps.points_3d.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Pose pose{uniform_rotation(rng), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(4, 10))};
    std::vector<ImagePoint> det = kps.project(pose, kCam);
    double want = 0;
    for (std::size_t i = 0; i < det.size(); ++i) {
      det[i].u += rng.uniform(-3, 3);
      det[i].v += rng.uniform(-3, 3);
      // ray through the detection, cut at the keypoint's camera z, in camera frame
      const Vec3 pc = pose.rotation_matrix() * kps.points_3d[i] + pose.translation;
      const Vec3 ray((det[i].u - kCam.px) / kCam.fx, (det[i].v - kCam.py) / kCam.fy, 1.0);
      want += (ray * pc.z() - pc).norm();  // rigid motion preserves the error length
    }
    want /= det.size() * pose.translation.norm();
    REQUIRE(std::abs(kps_vbn(det, pose, kCam, kps) - want) < 1e-12);
  }
}

TEST_CASE("kps_vbn is unchanged by scaling the scene") {
  Rng rng(6);
  KeypointSet kps = square_keypoints();
  const Pose pose{uniform_rotation(rng), Vec3(0.2, -0.1, 6)};
  std::vector<ImagePoint> det = kps.project(pose, kCam);
  for (auto& p : det) p.u += 1.5;
  const double base = kps_vbn(det, pose, kCam, kps);
  for (const double s : {0.1, 3.0, 100.0}) {
    KeypointSet scaled = kps;
    for (auto& p : scaled.points_3d) p *= s;
    const Pose sp{pose.rotation, pose.translation * s};
    CHECK(std::abs(kps_vbn(det, sp, kCam, scaled) - base) < 1e-9);
  }
}

TEST_CASE("keypoint set validation") {
  KeypointSet kps;
  kps.points_3d = {Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()};
  CHECK_THROWS_AS(kps.validate(), Error);
  kps.points_3d.push_back(Vec3::UnitZ());
  CHECK_NOTHROW(kps.validate());
  kps.names = {"a"};
  CHECK_THROWS_AS(kps.validate(), Error);
}

TEST_CASE("evaluate_pair on identical views") {
  const Pose pose{Quaternion::from_axis_angle(Vec3(1, 2, 0.5), 0.7), Vec3(0, 0, 4)};
  const View v = cube().render(pose, kCam);
  for (const Method m : {Method::Homography, Method::Transform3d}) {
    const QualityReport q = evaluate_pair(v, v, m, &cube().mesh(), cube().keypoints(), 1.0);
    CHECK(q.ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.iou == 1.0);
    CHECK(q.kps_l2 < 1e-9);
    CHECK(q.kps_vbn < 1e-9);
    CHECK(q.bdd == 0.0);
    CHECK(q.cl2 == 0.0);
    CHECK(q.num_keypoints == 8);
  }
}

TEST_CASE("evaluate_pair distances and keypoint oracle") {
  const Pose src{Quaternion::from_axis_angle(Vec3(1, 2, 0.5), 0.7), Vec3(0, 0, 4)};
  const Pose tgt{sample_at_bdd(src.rotation, 0.45, 0.01, 2), Vec3(0.1, 0, 4.2)};
  const View s = cube().render(src, kCam);
  View t = cube().render(tgt, kCam);
  const QualityReport q =
      evaluate_pair(s, t, Method::Transform3d, &cube().mesh(), cube().keypoints(), 0.5);
  CHECK(q.bdd == doctest::Approx(bdd_value(src.rotation, tgt.rotation)));
  CHECK(q.cl2 == doctest::Approx(cl2(src, tgt)));
  CHECK(q.spec == doctest::Approx(0.5 * cl2(src, tgt) + rotation_magnitude(src, tgt)));
  CHECK(q.iou >= 0.0);
  CHECK(q.iou <= 1.0);
  CHECK(q.kps_vbn >= 0.0);

  // the target mask may come from the mesh instead
  t.mask.reset();
  const QualityReport r =
      evaluate_pair(s, t, Method::Transform3d, &cube().mesh(), cube().keypoints(), 0.5);
  CHECK(r.iou == q.iou);
  View no_depth = s;
  no_depth.depth.reset();
  CHECK_THROWS_AS(evaluate_pair(no_depth, t, Method::Homography, nullptr, cube().keypoints(), 0.5),
                  Error);
}

TEST_CASE("keypoints outside the source view are rejected") {
  const Pose close{Quaternion(), Vec3(0, 0, 0.9)};  // corners project far outside
  View s = cube().render(close, kCam);
  try {
    evaluate_pair(s, s, Method::Homography, &cube().mesh(), cube().keypoints(), 1.0);
    FAIL("expected KeypointOutOfView");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KeypointOutOfView);
  }
}

TEST_CASE("csv row layout") {
  QualityReport q;
  q.ssim = 0.5;
  q.iou = 0.25;
  q.num_keypoints = 8;
  q.bdd = 0.1;
  CHECK(quality_csv_header() == "ssim,iou,kps_l2,kps_vbn,num_keypoints,bdd,cl2,rotmag,spec");
  CHECK(quality_csv_row(q) == "0.5,0.25,0,0,8,0.1,0,0,0");
}
