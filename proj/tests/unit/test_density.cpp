#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "support/oracles.hpp"
#include "visyreve/density.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"

using namespace visyreve;
namespace fs = std::filesystem;

namespace {

double min_pairwise(const std::vector<Quaternion>& qs) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t j = i + 1; j < qs.size(); ++j) m = std::min(m, bdd_value(qs[i], qs[j]));
  }
  return m;
}

std::vector<Quaternion> uniform_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Quaternion> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_rotation(rng));
  return out;
}

}  // namespace

TEST_CASE("uniform rotations are uniform on SO(3)") {
  // rotation angle of a Haar-random rotation has density (1 - cos t) / pi
  Rng rng(1);
  const int n = 200000;
  int below_half_pi = 0;
  double mean_z = 0.0;
  for (int i = 0; i < n; ++i) {
    const Quaternion q = uniform_rotation(rng);
    below_half_pi += 2.0 * std::acos(std::min(1.0, q.w())) < std::numbers::pi / 2;
    mean_z += q.rotate(Vec3::UnitZ()).z();
  }
  // P(angle < pi/2) = (pi/2 - 1) / pi
  const double p = (std::numbers::pi / 2 - 1) / std::numbers::pi;
  CHECK(double(below_half_pi) / n == doctest::Approx(p).epsilon(0.02));
  CHECK(std::abs(mean_z / n) < 0.01);
}

TEST_CASE("baseline sampling basics") {
  const BaselineSampling one = sample_baseline(1, 8, 5);
  CHECK(one.rotations.size() == 1);
  CHECK(one.candidates == 8);
  CHECK(one.seed == 5);
  CHECK_THROWS_AS(sample_baseline(0, 8, 5), Error);
  CHECK_THROWS_AS(sample_baseline(5, 0, 5), Error);

  const BaselineSampling a = sample_baseline(300, 16, 42);
  const BaselineSampling b = sample_baseline(300, 16, 42);
  CHECK(a.rotations == b.rotations);
  CHECK(sample_baseline(300, 16, 43).rotations != a.rotations);
}

TEST_CASE("second best-candidate sample approaches the maximum distance") {
  const BaselineSampling s = sample_baseline(2, 4096, 9);
  CHECK(bdd_value(s.rotations[0], s.rotations[1]) > 0.9);
}

TEST_CASE("best candidate spreads rotations further than uniform sampling") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BaselineSampling blue = sample_baseline(500, 32, seed);
    REQUIRE(min_pairwise(blue.rotations) > min_pairwise(uniform_set(500, seed)));
  }
}

TEST_CASE("lb_bdd examples") {
  const BaselineSampling base = sample_baseline(64, 8, 3);
  const DensityReport self = lb_bdd(std::span<const Quaternion>(base.rotations), base);
  CHECK(self.lb_bdd == 0.0);
  CHECK(std::isinf(self.rho));

  BaselineSampling flip;
  flip.rotations = {Quaternion::identity(),
                    Quaternion::from_axis_angle(Vec3::UnitX(), std::numbers::pi)};
  const std::vector<Quaternion> id{Quaternion::identity()};
  const DensityReport r = lb_bdd(std::span<const Quaternion>(id), flip);
  CHECK(r.lb_bdd == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ball_center_index == 1);
  CHECK(r.ball_center == flip.rotations[1]);
  CHECK(r.rho * r.lb_bdd == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<Quaternion> none;
  CHECK_THROWS_AS(lb_bdd(std::span<const Quaternion>(none), base), Error);
  CHECK_THROWS_AS(lb_bdd(std::span<const Quaternion>(id), BaselineSampling{}), Error);
}

TEST_CASE("lb_bdd matches the double-loop oracle") {
  const BaselineSampling base = sample_baseline(2000, 4, 11);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(100 + seed);
    std::vector<Pose> poses;
    for (int i = 0; i < 50; ++i) poses.push_back(oracle::random_pose(rng));
    double want = 0.0;
    for (const Quaternion& b : base.rotations) {
      double m = 1e300;
      for (const Pose& p : poses) m = std::min(m, oracle::bdd_from_matrices(b, p.rotation));
      want = std::max(want, m);
    }
    const DensityReport got = lb_bdd(std::span<const Pose>(poses), base, 2);
    CHECK(std::abs(got.lb_bdd - want) < 1e-9);
    CHECK(got.min_distances.size() == base.rotations.size());
    CHECK(*std::max_element(got.min_distances.begin(), got.min_distances.end()) == got.lb_bdd);
    // thread count does not change the result
    CHECK(lb_bdd(std::span<const Pose>(poses), base, 1).min_distances == got.min_distances);
  }
}

TEST_CASE("adding poses never increases lb_bdd") {
  const BaselineSampling base = sample_baseline(500, 4, 12);
  const std::vector<Quaternion> all = uniform_set(100, 13);
  double previous = 2.0;
  DensityTracker tracker(std::span<const Quaternion>(all.data(), 1), base);
  for (std::size_t n = 1; n <= all.size(); ++n) {
    if (n > 1) tracker.add(all[n - 1]);
    const DensityReport r = lb_bdd(std::span<const Quaternion>(all.data(), n), base);
    REQUIRE(r.lb_bdd <= previous);
    REQUIRE(r.lb_bdd >= 0.0);
    previous = r.lb_bdd;
    const DensityReport t = tracker.report();
    REQUIRE(t.min_distances == r.min_distances);
    REQUIRE(t.lb_bdd == r.lb_bdd);
    REQUIRE(t.ball_center_index == r.ball_center_index);
  }
}

TEST_CASE("filling the ball center removes that ball") {
  const BaselineSampling base = sample_baseline(500, 8, 14);
  std::vector<Quaternion> data = uniform_set(20, 15);
  const DensityReport before = lb_bdd(std::span<const Quaternion>(data), base);
  data.push_back(before.ball_center);
  const DensityReport after = lb_bdd(std::span<const Quaternion>(data), base);
  CHECK(after.min_distances[before.ball_center_index] == 0.0);
  CHECK(after.rho >= before.rho);
}

TEST_CASE("sample_at_bdd") {
  Rng rng(16);
  const Quaternion c = uniform_rotation(rng);
  const Quaternion zero = sample_at_bdd(c, 0.0, 1e-6, 1);
  CHECK(bdd_value(zero, c) <= 1e-6);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Quaternion q = sample_at_bdd(c, 0.25, 0.01, seed);
    const double d = bdd_value(q, c);
    REQUIRE(d >= 0.24);
    REQUIRE(d <= 0.26);
  }

  const BddValue top = bdd(sample_at_bdd(c, 1.0, 0.01, 2), c);
  CHECK(top.value >= 0.99);
  CHECK(top.theta > 0.98 * std::numbers::pi);
  CHECK(top.phi > 0.98 * std::numbers::pi / 2);

  CHECK(sample_at_bdd(c, 0.4, 0.01, 3) == sample_at_bdd(c, 0.4, 0.01, 3));
  CHECK_THROWS_AS(sample_at_bdd(c, 1.5, 0.01, 3), Error);
  CHECK_THROWS_AS(sample_at_bdd(c, 0.5, 0.0, 3), Error);
  try {
    sample_at_bdd(c, 0.5, 1e-12, 3, 10);
    FAIL("expected RejectionBudgetExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RejectionBudgetExhausted);
  }
}

TEST_CASE("density json and csv") {
  const fs::path dir = fs::temp_directory_path() / "visyreve_test_density";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const BaselineSampling base = sample_baseline(16, 4, 17);
  const RunInfo run{17, config_hash("density test")};

  const DensityReport zero = lb_bdd(std::span<const Quaternion>(base.rotations), base);
  write_density_json(zero, base, dir / "zero.json", run);
  nlohmann::json j;
  std::ifstream(dir / "zero.json") >> j;
  CHECK(j["rho"].is_null());
  CHECK(j["lb_bdd"] == 0.0);
  CHECK(j["meta"]["seed"] == 17);

  const std::vector<Quaternion> one{Quaternion::identity()};
  const DensityReport r = lb_bdd(std::span<const Quaternion>(one), base);
  write_density_json(r, base, dir / "r.json", run);
  std::ifstream(dir / "r.json") >> j;
  CHECK(j["rho"].get<double>() == doctest::Approx(1.0 / r.lb_bdd));

  write_density_csv(r, base, dir / "r.csv", run);
  std::ifstream csv(dir / "r.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == run.comment_line());
  int rows = 0;
  std::getline(csv, line);
  CHECK(line.rfind("# lb_bdd=", 0) == 0);
  std::getline(csv, line);
  CHECK(line == "baseline_index,qw,qx,qy,qz,min_bdd");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 16);
  fs::remove_all(dir);
}
