#include <cmath>
#include <numbers>

#include <doctest.h>

#include "support/oracles.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"

using namespace visyreve;

namespace {

constexpr double kPi = std::numbers::pi;

Quaternion neg(const Quaternion& q) { return Quaternion(-q.w(), -q.x(), -q.y(), -q.z()); }

}  // namespace

TEST_CASE("bdd examples") {
  const Quaternion id;
  CHECK(bdd_value(id, id) == 0.0);

  const Quaternion z30 = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 6);
  CHECK(bdd_value(z30, id) == 0.0);
  CHECK(bdd(z30, id).theta == doctest::Approx(kPi / 6));

  const Quaternion x180 = Quaternion::from_axis_angle(Vec3::UnitX(), kPi);
  const BddValue full = bdd(x180, id);
  CHECK(full.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(full.phi == doctest::Approx(kPi / 2).epsilon(1e-12));

  // theta = pi/2, phi = pi/4: (1/2) * (1 - |1/2 - 1|) = 1/4
  const Vec3 axis(std::sin(kPi / 4), 0, std::cos(kPi / 4));
  const BddValue quarter = bdd(Quaternion::from_axis_angle(axis, kPi / 2), id);
  CHECK(quarter.value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(quarter.theta == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(quarter.phi == doctest::Approx(kPi / 4).epsilon(1e-12));
}

TEST_CASE("bdd intermediates are consistent") {
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    const BddValue b = bdd(uniform_rotation(rng), uniform_rotation(rng));
    REQUIRE(b.theta >= 0.0);
    REQUIRE(b.theta <= kPi);
    REQUIRE(b.phi >= 0.0);
    REQUIRE(b.phi <= kPi / 2 + 1e-15);
    const double formula = b.theta / kPi * (1.0 - std::abs(2.0 * b.phi / kPi - 1.0));
    REQUIRE(std::abs(b.value - formula) < 1e-12);
    REQUIRE(b.axis_plus.z() >= 0.0);
    REQUIRE(std::abs(b.axis.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("bdd agrees with the rotation-matrix oracle") {
  Rng rng(37);
  for (int i = 0; i < 10000; ++i) {
    const Quaternion a = uniform_rotation(rng);
    const Quaternion b = uniform_rotation(rng);
    REQUIRE(std::abs(bdd_value(a, b) - oracle::bdd_from_matrices(a, b)) < 1e-9);
  }
}

TEST_CASE("bdd pseudometric properties") {
  Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    REQUIRE(bdd(a, a).value == 0.0);
    const double ab = bdd(a, b).value;
    REQUIRE(std::abs(ab - bdd(b, a).value) < 1e-12);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab <= 1.0);
    REQUIRE(bdd_value(neg(a.rotation), b.rotation) == ab);
    REQUIRE(bdd_value(a.rotation, neg(b.rotation)) == ab);
    const Pose moved{b.rotation, Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(1, 50))};
    REQUIRE(bdd(a, moved).value == ab);
  }
}

TEST_CASE("bdd is positive off the boresight") {
  Rng rng(43);
  for (int i = 0; i < 10000; ++i) {
    const Quaternion a = uniform_rotation(rng);
    const Quaternion b = uniform_rotation(rng);
    const BddValue v = bdd(a, b);
    if (v.theta > 1e-6 && v.phi > 1e-6) REQUIRE(v.value > 0.0);
  }
}

TEST_CASE("relative rotations about the boresight have zero bdd") {
  Rng rng(47);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion b = uniform_rotation(rng);
    const double angle = rng.uniform(-kPi, kPi);
    for (const double sign : {1.0, -1.0}) {
      const Quaternion a = Quaternion::from_axis_angle(Vec3(0, 0, sign), angle) * b;
      REQUIRE(bdd_value(a, b) < 1e-7);
    }
  }
}

TEST_CASE("cl2") {
  const Pose a{Quaternion(), Vec3(0, 0, 5)};
  const Pose b{Quaternion(), Vec3(0, 0, 8)};
  CHECK(cl2(a, a) == 0.0);
  CHECK(cl2(a, b) == doctest::Approx(3.0).epsilon(1e-15));
  Rng rng(53);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = oracle::random_pose(rng);
    const Pose q = oracle::random_pose(rng);
    REQUIRE(std::abs(cl2(p, q) - cl2(q, p)) < 1e-12);
  }
}

TEST_CASE("rotation magnitude") {
  const Quaternion id;
  CHECK(rotation_magnitude(id, id) == 0.0);
  Rng rng(59);
  for (int i = 0; i < 100; ++i) {
    const Vec3 axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK(rotation_magnitude(Quaternion::from_axis_angle(axis, kPi), id) ==
          doctest::Approx(kPi).epsilon(1e-12));
  }
  // 90 deg about z then 90 deg about x: the product has w = 1/2, so theta = 2 acos(1/2)
  const Quaternion qz = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  const Quaternion qx = Quaternion::from_axis_angle(Vec3::UnitX(), kPi / 2);
  const Mat3 composed = qx.to_matrix() * qz.to_matrix();
  const double trace_angle = std::acos((composed.trace() - 1.0) / 2.0);
  CHECK(trace_angle == doctest::Approx(2 * kPi / 3).epsilon(1e-12));
  CHECK(rotation_magnitude(qx * qz, id) == doctest::Approx(2 * kPi / 3).epsilon(1e-12));
}

TEST_CASE("spec combined") {
  const Pose a{Quaternion(), Vec3(0, 0, 5)};
  const Pose b{Quaternion(), Vec3(3, 0, 5)};
  CHECK(spec_combined(a, a, 0.1) == 0.0);
  CHECK(spec_combined(a, b, 0.1) == doctest::Approx(0.3).epsilon(1e-15));
  // rotating about the target origin with t fixed moves the camera center;
  // rotating with C fixed isolates the rotation term
  const Quaternion flip = Quaternion::from_axis_angle(Vec3::UnitY(), kPi);
  const Pose c{flip, flip.rotate(-camera_center(a))};
  CHECK(cl2(a, c) < 1e-12);
  CHECK(spec_combined(a, c, 0.1) == doctest::Approx(kPi).epsilon(1e-12));
  CHECK_THROWS_AS(spec_combined(a, b, 0.0), Error);
}

TEST_CASE("distance dispatch") {
  Rng rng(61);
  const Pose a = oracle::random_pose(rng);
  const Pose b = oracle::random_pose(rng);
  CHECK(distance(DistanceKind::bdd(), a, b) == bdd(a, b).value);
  CHECK(distance(DistanceKind::cl2(), a, b) == cl2(a, b));
  CHECK(distance(DistanceKind::rotation_magnitude(), a, b) == rotation_magnitude(a, b));
  CHECK(distance(DistanceKind::spec_combined(0.2), a, b) == spec_combined(a, b, 0.2));
  for (const DistanceKind k : {DistanceKind::bdd(), DistanceKind::cl2(),
                               DistanceKind::rotation_magnitude(),
                               DistanceKind::spec_combined(1.0)}) {
    CHECK(distance(k, a, a) == 0.0);
    CHECK(DistanceKind::parse(k.name(), k.weight_position()) == k);
  }
  CHECK_FALSE(DistanceKind::bdd().is_metric());
  CHECK(DistanceKind::cl2().is_metric());
  CHECK_THROWS_AS(DistanceKind::spec_combined(-1), Error);
  CHECK_THROWS_AS(DistanceKind::parse("spec"), Error);
  CHECK_THROWS_AS(DistanceKind::parse("geodesic"), Error);
}

TEST_CASE("triangle inequality is measured, not assumed") {
  Rng rng(67);
  int violations = 0;
  for (int i = 0; i < 20000; ++i) {
    const Quaternion a = uniform_rotation(rng);
    const Quaternion b = uniform_rotation(rng);
    const Quaternion c = uniform_rotation(rng);
    if (bdd_value(a, c) > bdd_value(a, b) + bdd_value(b, c) + 1e-12) ++violations;
  }
  MESSAGE("bdd triangle-inequality violations in 20000 triples: " << violations);

  // C-L2 and rotation magnitude are true metrics
  for (int i = 0; i < 10000; ++i) {
    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    const Pose c = oracle::random_pose(rng);
    REQUIRE(cl2(a, c) <= cl2(a, b) + cl2(b, c) + 1e-12);
    REQUIRE(rotation_magnitude(a, c) <= rotation_magnitude(a, b) + rotation_magnitude(b, c) + 1e-12);
  }
}
