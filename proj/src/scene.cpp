#include "visyreve/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"

namespace visyreve {

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "cube") return SceneKind::Cube;
  if (name == "plane") return SceneKind::Plane;
  if (name == "two-boxes") return SceneKind::TwoBoxes;
  throw Error(ErrorCode::InvalidArgument, "unknown scene kind '" + std::string(name) + "'");
}

std::string_view scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::Cube: return "cube";
    case SceneKind::Plane: return "plane";
    case SceneKind::TwoBoxes: return "two-boxes";
  }
  return "cube";
}

namespace {

void add_box(TriangleMesh& mesh, KeypointSet& kps, const Vec3& center, const Vec3& size,
             const std::string& prefix) {
  const int base = static_cast<int>(mesh.vertices.size());
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner(i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5, i & 4 ? 0.5 : -0.5);
    const Vec3 p = center + corner.cwiseProduct(size);
    mesh.vertices.push_back(p);
    kps.points_3d.push_back(p);
    kps.names.push_back(prefix + std::to_string(i));
  }
  // outward-facing quads, split into two triangles each
  static constexpr int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                      {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    mesh.triangles.push_back({base + q[0], base + q[1], base + q[2]});
    mesh.triangles.push_back({base + q[0], base + q[2], base + q[3]});
  }
}

}  // namespace

SyntheticScene::SyntheticScene(const SceneSpec& spec) : spec_(spec) {
  switch (spec.kind) {
    case SceneKind::Cube:
      add_box(mesh_, keypoints_, Vec3::Zero(), Vec3::Ones(), "c");
      break;
    case SceneKind::TwoBoxes:
      add_box(mesh_, keypoints_, Vec3::Zero(), Vec3::Ones(), "a");
      add_box(mesh_, keypoints_, Vec3(0.9, 0.6, 0.3), Vec3::Constant(0.5), "b");
      break;
    case SceneKind::Plane:
      mesh_.vertices = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
      mesh_.triangles = {{0, 1, 2}, {0, 2, 3}};
      keypoints_.points_3d = mesh_.vertices;
      keypoints_.names = {"p0", "p1", "p2", "p3"};
      break;
  }

  Rng rng(spec.texture_seed);
  Vec3 light;
  do {
    light = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  } while (light.norm() < 0.1 || light.norm() > 1.0);
  light.normalize();
  for (const auto& t : mesh_.triangles) {
    const Vec3 n = (mesh_.vertices[t[1]] - mesh_.vertices[t[0]])
                       .cross(mesh_.vertices[t[2]] - mesh_.vertices[t[0]])
                       .normalized();
    face_base_.push_back(60.0 + 130.0 * std::abs(n.dot(light)));
  }
  constexpr double wavelength = 0.5;
  for (int i = 0; i < 3; ++i) {
    Vec3 d;
    do {
      d = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (d.norm() < 0.1 || d.norm() > 1.0);
    waves_.push_back({d.normalized() * (2.0 * std::numbers::pi / wavelength),
                      2.0 * std::numbers::pi * rng.uniform()});
  }
}

double SyntheticScene::intensity(int triangle, const Vec3& p) const {
  double texture = 0.0;
  for (const Wave& w : waves_) texture += std::sin(w.direction.dot(p) + w.phase);
  return face_base_[triangle] + 20.0 * texture / double(waves_.size());
}

View SyntheticScene::render(const Pose& pose, const Intrinsics& k, int supersample) const {
  if (supersample < 1) throw Error(ErrorCode::InvalidArgument, "supersample must be >= 1");
  View view;
  view.pose = pose;
  view.intrinsics = k;
  DepthRenderer r;
  view.depth = r.render(mesh_, pose, k);
  view.mask = mask_from_depth(*view.depth);

  const Intrinsics hi = k.upsampled(supersample);
  const DepthMap& depth = r.render(mesh_, pose, hi);
  const auto& ids = r.triangle_ids();
  const Pose to_target = pose.inverse();
  std::vector<double> shade(std::size_t(hi.width) * hi.height, 0.0);
  for (int y = 0; y < hi.height; ++y) {
    for (int x = 0; x < hi.width; ++x) {
      const std::size_t i = std::size_t(y) * hi.width + x;
      if (ids[i] < 0) continue;
      const Vec3 p = to_target.transform(backproject({double(x), double(y)}, depth.values[i], hi));
      shade[i] = intensity(ids[i], p);
    }
  }
  view.image = Image(k.width, k.height, 1);
  const double norm = 1.0 / (supersample * supersample);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < supersample; ++dy) {
        for (int dx = 0; dx < supersample; ++dx) {
          s += shade[std::size_t(y * supersample + dy) * hi.width + x * supersample + dx];
        }
      }
      if (!view.mask->at(x, y)) continue;
      view.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(s * norm + 0.5, 0.0, 255.0));
    }
  }
  return view;
}

std::vector<Pose> sample_poses(std::size_t n, const PoseSamplerConfig& config) {
  if (!(config.range_min > 0.0 && config.range_max >= config.range_min) ||
      !(config.lateral >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < range_min <= range_max and lateral >= 0");
  }
  Rng rng(config.seed);
  auto draw_attitude = [&]() {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Quaternion q = uniform_rotation(rng);
      if (!config.hole_center || bdd_value(q, *config.hole_center) >= config.hole_radius) {
        return q;
      }
    }
    throw Error(ErrorCode::RejectionBudgetExhausted, "attitude hole leaves no room");
  };

  std::vector<Quaternion> attitudes;
  attitudes.reserve(n);
  while (attitudes.size() < n) {
    if (config.attitudes == PoseSamplerConfig::Attitudes::Uniform || attitudes.empty()) {
      attitudes.push_back(draw_attitude());
      continue;
    }
    Quaternion best;
    double best_min = -1.0;
    for (std::size_t c = 0; c < std::max<std::size_t>(1, config.blue_noise_candidates); ++c) {
      const Quaternion q = draw_attitude();
      double m = std::numeric_limits<double>::infinity();
      for (const Quaternion& a : attitudes) {
        m = std::min(m, bdd_value(q, a));
        if (m <= best_min) break;
      }
      if (m > best_min) {
        best_min = m;
        best = q;
      }
    }
    attitudes.push_back(best);
  }

  std::vector<Pose> poses;
  poses.reserve(n);
  for (const Quaternion& q : attitudes) {
    const double range = rng.uniform(config.range_min, config.range_max);
    const double ox = rng.uniform(-config.lateral, config.lateral) * range;
    const double oy = rng.uniform(-config.lateral, config.lateral) * range;
    poses.push_back({q, Vec3(ox, oy, range)});
  }
  return poses;
}

}  // namespace visyreve
