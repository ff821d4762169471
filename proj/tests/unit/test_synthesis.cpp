#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "support/oracles.hpp"
#include "visyreve/campaign.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/scene.hpp"
#include "visyreve/synthesis.hpp"

using namespace visyreve;

namespace {

constexpr double kPi = std::numbers::pi;
const Intrinsics kCam{150, 150, 63.5, 63.5, 128, 128};

const SyntheticScene& cube() {
  static const SyntheticScene scene({SceneKind::Cube, 7});
  return scene;
}

const Pose kSource{Quaternion::from_axis_angle(Vec3(1, 2, 0.5), 0.7), Vec3(0, 0, 4)};

Pose about_boresight(const Pose& p, double angle) {
  const Quaternion rz = Quaternion::from_axis_angle(Vec3::UnitZ(), angle);
  return {rz * p.rotation, rz.rotate(p.translation)};
}

// mean |synth - affine oracle| over transformed pixels whose oracle footprint
// lies inside the source mask
double affine_mae(const SynthesisResult& r, const View& s, double angle) {
  double err = 0.0;
  int n = 0;
  for (int y = 0; y < r.image.height; ++y) {
    for (int x = 0; x < r.image.width; ++x) {
      if (r.valid_map.at(x, y) != PixelState::Transformed) continue;
      double u, v;
      oracle::boresight_affine(s.intrinsics, angle, x, y, u, v);
      const auto want = oracle::bilinear_inside(s.image, *s.mask, u, v);
      if (!want) continue;
      err += std::abs(*want - r.image.at(x, y));
      ++n;
    }
  }
  REQUIRE(n > 1000);
  return err / n;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("homography") == Method::Homography);
  CHECK(parse_method("hom") == Method::Homography);
  CHECK(parse_method("3dt") == Method::Transform3d);
  CHECK(method_name(Method::Transform3d) == "3dt");
  CHECK_THROWS_AS(parse_method("morph"), Error);
}

TEST_CASE("homography matrix") {
  const Mat3 g = homography_matrix(kSource, kSource, kCam);
  CHECK((g - Mat3::Identity()).norm() < 1e-12);

  // boresight rotation: G = K Rz K^-1
  const double a = 0.4;
  const Mat3 want = kCam.matrix() * Quaternion::from_axis_angle(Vec3::UnitZ(), a).to_matrix() *
                    kCam.inverse_matrix();
  const Mat3 got = homography_matrix(kSource, about_boresight(kSource, a), kCam);
  CHECK((got / got(2, 2) - want / want(2, 2)).norm() < 1e-9);

  try {
    homography_matrix({Quaternion(), Vec3::Zero()}, kSource, kCam);
    FAIL("expected ZeroRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroRange);
  }
  // the target camera sits on the plane
  try {
    homography_matrix({Quaternion(), Vec3(0, 0, 5)}, {Quaternion(), Vec3(0, 0, 0)}, kCam);
    FAIL("expected SingularHomography");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularHomography);
  }
}

TEST_CASE("identity synthesis reproduces the masked source") {
  View s = cube().render(kSource, kCam);
  s.keypoints_2d = cube().keypoints().project(kSource, kCam);
  const Image masked = apply_mask(s.image, *s.mask);
  for (const Method m : {Method::Homography, Method::Transform3d}) {
    const SynthesisResult r = synthesize(m, s, kSource, &cube().mesh());
    CHECK(r.image == masked);
    CHECK(r.transformed_mask == *s.mask);
    CHECK(r.valid_map.count(PixelState::Gap) == 0);
    CHECK(r.valid_map.count(PixelState::Interpolated) == 0);
    REQUIRE(r.transformed_keypoints);
    for (std::size_t i = 0; i < s.keypoints_2d->size(); ++i) {
      CHECK((*r.transformed_keypoints)[i].u == doctest::Approx((*s.keypoints_2d)[i].u).epsilon(1e-9));
      CHECK((*r.transformed_keypoints)[i].v == doctest::Approx((*s.keypoints_2d)[i].v).epsilon(1e-9));
    }
    CHECK(r.timing.total >= r.timing.warp);
  }
}

TEST_CASE("boresight rotation matches the affine oracle") {
  View s = cube().render(kSource, kCam);
  s.keypoints_2d = cube().keypoints().project(kSource, kCam);
  for (const double deg : {10.0, 30.0}) {
    const double a = deg * kPi / 180;
    const Pose t = about_boresight(kSource, a);
    const SynthesisResult hom = homography_transform(s, t);
    const SynthesisResult tdt = transform_3d(s, t, &cube().mesh());
    CHECK(affine_mae(hom, s, a) <= 2.0);
    CHECK(affine_mae(tdt, s, a) <= 3.0);
    // keypoints follow the inverse of the affine map
    const auto truth = cube().keypoints().project(t, kCam);
    for (const auto* r : {&hom, &tdt}) {
      for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(std::abs((*r->transformed_keypoints)[i].u - truth[i].u) < 1e-6);
        CHECK(std::abs((*r->transformed_keypoints)[i].v - truth[i].v) < 1e-6);
      }
    }
  }
}

TEST_CASE("homography is exact for a fronto-parallel plane") {
  const SyntheticScene plane({SceneKind::Plane, 3});
  // plane z = 0 in the target frame sits at depth ||t_S|| in the source
  const Pose src{Quaternion(), Vec3(0, 0, 2.5)};
  View s = plane.render(src, kCam);
  const Pose tgt{Quaternion::from_axis_angle(Vec3(1, -1, 0.3), 0.12), Vec3(0.05, -0.04, 2.6)};
  const View truth = plane.render(tgt, kCam);
  const SynthesisResult r = homography_transform(s, tgt);
  double err = 0;
  int n = 0;
  for (int y = 1; y < 127; ++y) {
    for (int x = 1; x < 127; ++x) {
      // interior of both masks, away from the plane's border
      bool inside = true;
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          inside = inside && truth.mask->at(x + i, y + j) &&
                   r.valid_map.at(x + i, y + j) == PixelState::Transformed;
        }
      }
      if (!inside) continue;
      err += std::abs(double(r.image.at(x, y)) - truth.image.at(x, y));
      ++n;
    }
  }
  REQUIRE(n > 5000);
  CHECK(err / n <= 2.0);

  // the keypoints (plane corners) map through G exactly
  s.keypoints_2d = plane.keypoints().project(src, kCam);
  const SynthesisResult rk = homography_transform(s, tgt);
  const auto want = plane.keypoints().project(tgt, kCam);
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(std::abs((*rk.transformed_keypoints)[i].u - want[i].u) < 1e-6);
    CHECK(std::abs((*rk.transformed_keypoints)[i].v - want[i].v) < 1e-6);
  }
}

TEST_CASE("3d transform at bdd 0.1 keeps the silhouette") {
  // A cube can reveal a whole new face at BDD 0.1 and disocclusions are not
  // synthesized, so single pairs fall below 0.9; the typical one does not.
  const Intrinsics k{300, 300, 127.5, 127.5, 256, 256};
  Rng rng(1);
  std::vector<double> ious;
  for (int i = 0; i < 15; ++i) {
    const Pose src{uniform_rotation(rng), Vec3(0, 0, 4)};
    const Pose tgt{sample_at_bdd(src.rotation, 0.1, 0.005, i), src.translation};
    const View s = cube().render(src, k);
    const View truth = cube().render(tgt, k);
    const SynthesisResult r = transform_3d(s, tgt, &cube().mesh());
    ious.push_back(iou(r.transformed_mask, *truth.mask));

  }
  std::sort(ious.begin(), ious.end());
  MESSAGE("iou at bdd 0.1: min " << ious.front() << " median " << ious[ious.size() / 2]);
  CHECK(ious[ious.size() / 2] >= 0.9);
}

TEST_CASE("interpolation only fills, never overwrites") {
  const View s = cube().render(kSource, kCam);
  const Pose tgt{kSource.rotation * Quaternion::from_axis_angle(Vec3::UnitX(), 0.3),
                 kSource.translation * 0.8};
  SynthesisOptions off;
  off.interpolate = false;
  const SynthesisResult raw = transform_3d(s, tgt, &cube().mesh(), off);
  const SynthesisResult filled = transform_3d(s, tgt, &cube().mesh());
  CHECK(raw.valid_map.count(PixelState::Interpolated) == 0);
  CHECK(filled.valid_map.count(PixelState::Interpolated) > 0);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      const PixelState a = raw.valid_map.at(x, y);
      const PixelState b = filled.valid_map.at(x, y);
      if (a == PixelState::Transformed) {
        REQUIRE(b == PixelState::Transformed);
        REQUIRE(raw.image.at(x, y) == filled.image.at(x, y));
      }
      if (b == PixelState::Interpolated) REQUIRE(a == PixelState::Gap);
      REQUIRE(filled.transformed_mask.at(x, y) ==
              (b == PixelState::Transformed || b == PixelState::Interpolated));
    }
  }
  // homography never interpolates
  const SynthesisResult hom = homography_transform(s, tgt);
  CHECK(hom.valid_map.count(PixelState::Interpolated) == 0);
  CHECK(hom.valid_map.count(PixelState::Gap) == 0);
}

TEST_CASE("filled pixels are the mean of their 5x5 transformed neighbors") {
  const View s = cube().render(kSource, kCam);
  const Pose tgt{kSource.rotation * Quaternion::from_axis_angle(Vec3::UnitY(), 0.25),
                 kSource.translation * 0.85};
  const SynthesisResult r = transform_3d(s, tgt, &cube().mesh());
  int checked = 0;
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      if (r.valid_map.at(x, y) != PixelState::Interpolated) continue;
      double sum = 0;
      int n = 0;
      for (int j = -2; j <= 2; ++j) {
        for (int i = -2; i <= 2; ++i) {
          const int u = x + i, v = y + j;
          if (u < 0 || v < 0 || u >= 128 || v >= 128) continue;
          if (r.valid_map.at(u, v) != PixelState::Transformed) continue;
          sum += r.image.at(u, v);
          ++n;
        }
      }
      REQUIRE(n > 0);
      CHECK(std::abs(r.image.at(x, y) - sum / n) <= 0.5 + 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("3d transform from a stored depth map equals the mesh path") {
  const View s = cube().render(kSource, kCam);
  const Pose tgt{sample_at_bdd(kSource.rotation, 0.2, 0.01, 5), kSource.translation};
  const SynthesisResult a = transform_3d(s, tgt, &cube().mesh());
  const SynthesisResult b = transform_3d(s, tgt, nullptr);
  CHECK(a.image == b.image);
  View bare = s;
  bare.depth.reset();
  try {
    transform_3d(bare, tgt, nullptr);
    FAIL("expected MissingMesh");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingMesh);
  }
}

TEST_CASE("3d transform reports empty overlap") {
  const View s = cube().render(kSource, kCam);
  // camera turned away from the target
  const Pose away{Quaternion::from_axis_angle(Vec3::UnitX(), kPi) * kSource.rotation,
                  Vec3(0, 0, -4)};
  try {
    transform_3d(s, away, &cube().mesh());
    FAIL("expected EmptyOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyOverlap);
  }
}

TEST_CASE("homography masks with the rendered silhouette on request") {
  View s = cube().render(kSource, kCam);
  const Mask truth = *s.mask;
  s.mask.reset();
  s.depth.reset();
  SynthesisOptions opt;
  opt.mask_with_mesh = true;
  const SynthesisResult r = homography_transform(s, kSource, &cube().mesh(), opt);
  CHECK(r.transformed_mask == truth);
  CHECK_THROWS_AS(homography_transform(s, kSource, nullptr, opt), Error);
  // no mask at all: the whole frame is the input
  const SynthesisResult whole = homography_transform(s, kSource);
  CHECK(whole.transformed_mask.count() == 128u * 128u);
}

TEST_CASE("view validation") {
  View v;
  CHECK_THROWS_AS(v.validate(), Error);
  View s = cube().render(kSource, kCam);
  CHECK_NOTHROW(s.validate());
  s.mask = Mask(10, 10);
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("valid map palette") {
  ValidMap m(4, 1);
  m.states = {PixelState::Background, PixelState::Transformed, PixelState::Interpolated,
              PixelState::Gap};
  const Image img = valid_map_image(m);
  CHECK(img.channels == 3);
  CHECK(img.at(0, 0, 0) == 0);
  CHECK(img.at(1, 0, 1) == 255);
  CHECK(img.at(2, 0, 0) == 0);
  CHECK(img.at(2, 0, 1) == 128);
  CHECK(img.at(2, 0, 2) == 255);
  CHECK(img.at(3, 0, 0) == 255);
  CHECK(img.at(3, 0, 1) == 0);
}

TEST_CASE("rgb images warp per channel") {
  View s = cube().render(kSource, kCam);
  Image rgb(128, 128, 3);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = static_cast<std::uint8_t>(s.image.at(x, y) / (c + 1));
    }
  }
  View colored = s;
  colored.image = rgb;
  const Pose t = about_boresight(kSource, 0.3);
  for (const Method m : {Method::Homography, Method::Transform3d}) {
    const SynthesisResult gray = synthesize(m, s, t, &cube().mesh());
    const SynthesisResult color = synthesize(m, colored, t, &cube().mesh());
    CHECK(color.image.channels == 3);
    CHECK(color.transformed_mask == gray.transformed_mask);
  }
}

TEST_CASE("source selection") {
  std::vector<IndexEntry> entries;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) entries.push_back({"v" + std::to_string(100 + i), oracle::random_pose(rng)});
  const PoseIndex index = PoseIndex::build(entries, DistanceKind::bdd());
  CHECK(select_source(index, entries[7].pose) == entries[7].id);
  for (int i = 0; i < 50; ++i) {
    const Pose q = oracle::random_pose(rng);
    std::string best;
    double bd = 2, bc = 0;
    for (const auto& e : entries) {
      const double d = bdd_value(e.pose.rotation, q.rotation);
      const double c = cl2(e.pose, q);
      if (d < bd || (d == bd && (c < bc || (c == bc && e.id < best)))) {
        best = e.id;
        bd = d;
        bc = c;
      }
    }
    REQUIRE(select_source(index, q) == best);
  }
  // equal attitudes: the closer camera wins
  std::vector<IndexEntry> tied{{"far", {kSource.rotation, Vec3(0, 0, 9)}},
                               {"near", {kSource.rotation, Vec3(0, 0, 5)}}};
  CHECK(select_source(PoseIndex::build(tied, DistanceKind::bdd()), kSource) == "near");
  CHECK_THROWS_AS(select_source(PoseIndex::build(tied, DistanceKind::cl2()), kSource), Error);
}

TEST_CASE("degradation grows with bdd for both methods") {
  Rng rng(9);
  std::vector<View> views;
  std::vector<Pose> poses;
  for (int i = 0; i < 40; ++i) {
    const Pose p{uniform_rotation(rng), Vec3(0, 0, rng.uniform(3.5, 4.5))};
    poses.push_back(p);
    views.push_back(cube().render(p, kCam, 1));
  }
  for (const Method m : {Method::Homography, Method::Transform3d}) {
    std::vector<double> bdds, loss;
    Rng pick(10);
    while (bdds.size() < 200) {
      const std::size_t a = pick.index(views.size());
      const std::size_t b = pick.index(views.size());
      if (a == b) continue;
      const double d = bdd_value(poses[a].rotation, poses[b].rotation);
      if (d >= 0.5) continue;
      SynthesisResult r;
      try {
        r = synthesize(m, views[a], poses[b], &cube().mesh());
      } catch (const Error&) {
        continue;
      }
      bdds.push_back(d);
      loss.push_back(1.0 - iou(r.transformed_mask, *views[b].mask));
    }
    const double rho = spearman(bdds, loss);
    MESSAGE(method_name(m) << " spearman(bdd, 1 - iou) = " << rho);
    CHECK(rho > 0.0);
  }
}
