#include "visyreve/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "visyreve/error.hpp"
#include "visyreve/image.hpp"

namespace visyreve {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetManifest::validate() const {
  try {
    intrinsics.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, std::string("intrinsics: ") + e.what());
  }
  std::set<std::string> ids;
  for (const ViewRecord& v : views) {
    if (v.id.empty()) throw Error(ErrorCode::SchemaError, "views[].id: empty id");
    if (!ids.insert(v.id).second) {
      throw Error(ErrorCode::SchemaError, "views[].id: duplicate id '" + v.id + "'");
    }
    if (!(v.pose.translation.z() > 0.0) || !v.pose.translation.allFinite()) {
      throw Error(ErrorCode::SchemaError,
                  "views[" + v.id + "].t_xyz: target must be in front of the camera (t_z > 0)");
    }
  }
}

std::vector<Pose> DatasetManifest::poses() const {
  std::vector<Pose> out;
  out.reserve(views.size());
  for (const ViewRecord& v : views) out.push_back(v.pose);
  return out;
}

std::size_t DatasetManifest::find(const std::string& id) const {
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].id == id) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "no view with id '" + id + "'");
}

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& reason) {
  throw Error(ErrorCode::SchemaError, field + ": " + reason);
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema_error(where + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) schema_error(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(field, "not finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) schema_error(field, "expected an integer");
  return j.get<int>();
}

std::string string_field(const json& j, const std::string& field) {
  if (!j.is_string()) schema_error(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, std::size_t n, const std::string& field) {
  if (!j.is_array() || j.size() != n) {
    schema_error(field, "expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

fs::path existing_path(const json& j, const fs::path& base, const std::string& field) {
  const fs::path p = (base / string_field(j, field)).lexically_normal();
  if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, field + ": " + p.string() + " not found");
  return p;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(fs::exists(path) ? ErrorCode::IoError : ErrorCode::MissingFile,
                "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

Quaternion parse_quaternion(const json& j, const std::string& field) {
  const std::vector<double> q = numbers(j, 4, field);
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw Error(ErrorCode::BadQuaternion, fmt::format("{}: norm {} is not 1 within 1e-6", field, n));
  }
  return {q[0], q[1], q[2], q[3]};
}

json intrinsics_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"px", k.px}, {"py", k.py},
          {"width", k.width}, {"height", k.height}};
}

Intrinsics parse_intrinsics(const json& j) {
  Intrinsics k;
  k.fx = number(require(j, "fx", "intrinsics."), "intrinsics.fx");
  k.fy = number(require(j, "fy", "intrinsics."), "intrinsics.fy");
  k.px = number(require(j, "px", "intrinsics."), "intrinsics.px");
  k.py = number(require(j, "py", "intrinsics."), "intrinsics.py");
  k.width = integer(require(j, "width", "intrinsics."), "intrinsics.width");
  k.height = integer(require(j, "height", "intrinsics."), "intrinsics.height");
  return k;
}

std::string relative_to(const fs::path& p, const fs::path& dir) {
  const fs::path abs_dir = fs::absolute(dir).lexically_normal();
  const fs::path abs_p = fs::absolute(p).lexically_normal();
  const fs::path rel = abs_p.lexically_relative(abs_dir);
  return (rel.empty() ? abs_p : rel).generic_string();
}

}  // namespace

Pose pose_from_json(const json& j, const std::string& field) {
  Pose p;
  p.rotation = parse_quaternion(require(j, "q_wxyz", field + "."), field + ".q_wxyz");
  const std::vector<double> t = numbers(require(j, "t_xyz", field + "."), 3, field + ".t_xyz");
  p.translation = Vec3(t[0], t[1], t[2]);
  return p;
}

json pose_to_json(const Pose& pose) {
  const Quaternion& q = pose.rotation;
  const Vec3& t = pose.translation;
  return {{"q_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"t_xyz", {t.x(), t.y(), t.z()}}};
}

Pose load_pose(const fs::path& path) { return pose_from_json(read_json(path), path.filename().string()); }

DatasetManifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = fs::absolute(path).parent_path();
  if (!j.is_object()) schema_error("(root)", "expected an object");
  const int schema = integer(require(j, "schema", ""), "schema");
  if (schema != kManifestSchema) {
    schema_error("schema", "unsupported version " + std::to_string(schema));
  }

  DatasetManifest m;
  m.name = string_field(require(j, "name", ""), "name");
  m.intrinsics = parse_intrinsics(require(j, "intrinsics", ""));
  if (j.contains("mesh") && !j["mesh"].is_null()) m.mesh = existing_path(j["mesh"], base, "mesh");
  if (j.contains("keypoints_3d")) {
    const json& kj = j["keypoints_3d"];
    if (!kj.is_array()) schema_error("keypoints_3d", "expected an array");
    KeypointSet kps;
    for (std::size_t i = 0; i < kj.size(); ++i) {
      const std::string field = "keypoints_3d[" + std::to_string(i) + "]";
      const std::vector<double> xyz = numbers(require(kj[i], "xyz", field + "."), 3, field + ".xyz");
      kps.points_3d.emplace_back(xyz[0], xyz[1], xyz[2]);
      kps.names.push_back(kj[i].contains("name") ? string_field(kj[i]["name"], field + ".name")
                                                 : std::to_string(i));
    }
    m.keypoints = std::move(kps);
  }
  if (j.contains("synthetic")) {
    const json& sj = j["synthetic"];
    SceneSpec spec;
    try {
      spec.kind = parse_scene_kind(string_field(require(sj, "kind", "synthetic."), "synthetic.kind"));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument) throw;
      schema_error("synthetic.kind", e.what());
    }
    const json& seed = require(sj, "texture_seed", "synthetic.");
    if (!seed.is_number_unsigned()) schema_error("synthetic.texture_seed", "expected an unsigned integer");
    spec.texture_seed = seed.get<std::uint64_t>();
    m.synthetic = spec;
  }

  const json& vj = require(j, "views", "");
  if (!vj.is_array()) schema_error("views", "expected an array");
  for (std::size_t i = 0; i < vj.size(); ++i) {
    const std::string field = "views[" + std::to_string(i) + "]";
    const json& v = vj[i];
    ViewRecord r;
    r.id = string_field(require(v, "id", field + "."), field + ".id");
    r.image = existing_path(require(v, "image", field + "."), base, field + ".image");
    r.pose = pose_from_json(v, field);
    if (v.contains("mask") && !v["mask"].is_null()) {
      r.mask = existing_path(v["mask"], base, field + ".mask");
    }
    if (v.contains("depth") && !v["depth"].is_null()) {
      r.depth = existing_path(v["depth"], base, field + ".depth");
    }
    if (v.contains("provenance")) r.provenance = v["provenance"];
    m.views.push_back(std::move(r));
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path dir = fs::absolute(path).parent_path();
  json j;
  j["schema"] = kManifestSchema;
  j["name"] = m.name;
  j["intrinsics"] = intrinsics_json(m.intrinsics);
  if (m.mesh) j["mesh"] = relative_to(*m.mesh, dir);
  if (m.keypoints) {
    json kj = json::array();
    for (std::size_t i = 0; i < m.keypoints->size(); ++i) {
      const Vec3& p = m.keypoints->points_3d[i];
      kj.push_back({{"name", i < m.keypoints->names.size() ? m.keypoints->names[i]
                                                            : std::to_string(i)},
                    {"xyz", {p.x(), p.y(), p.z()}}});
    }
    j["keypoints_3d"] = kj;
  }
  if (m.synthetic) {
    j["synthetic"] = {{"kind", scene_kind_name(m.synthetic->kind)},
                      {"texture_seed", m.synthetic->texture_seed}};
  }
  json views = json::array();
  for (const ViewRecord& r : m.views) {
    json v = pose_to_json(r.pose);
    v["id"] = r.id;
    v["image"] = relative_to(r.image, dir);
    if (r.mask) v["mask"] = relative_to(*r.mask, dir);
    if (r.depth) v["depth"] = relative_to(*r.depth, dir);
    if (!r.provenance.is_null()) v["provenance"] = r.provenance;
    views.push_back(std::move(v));
  }
  j["views"] = std::move(views);

  fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

Dataset::Dataset(DatasetManifest manifest, std::size_t cache_capacity)
    : manifest_(std::move(manifest)), capacity_(std::max<std::size_t>(1, cache_capacity)) {}

Dataset Dataset::open(const fs::path& manifest_path, std::size_t cache_capacity) {
  return Dataset(load_manifest(manifest_path), cache_capacity);
}

std::shared_ptr<const View> Dataset::view(std::size_t i) const {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(i);
    if (it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first;
    }
  }
  // decode outside the lock; a concurrent miss on the same view decodes twice
  // but both copies are identical
  const ViewRecord& r = manifest_.views.at(i);
  auto v = std::make_shared<View>();
  v->image = load_png(r.image);
  v->pose = r.pose;
  v->intrinsics = manifest_.intrinsics;
  if (r.mask) v->mask = load_mask_png(*r.mask);
  if (r.depth) v->depth = load_depth(*r.depth);
  v->validate();

  std::lock_guard lock(mutex_);
  auto it = cache_.find(i);
  if (it != cache_.end()) return it->second.first;
  lru_.push_front(i);
  cache_.emplace(i, std::make_pair(std::shared_ptr<const View>(v), lru_.begin()));
  while (cache_.size() > capacity_) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  return v;
}

std::size_t Dataset::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::optional<TriangleMesh> Dataset::load_mesh() const {
  if (!manifest_.mesh) return std::nullopt;
  return load_obj(*manifest_.mesh);
}

PoseIndex Dataset::index(const DistanceKind& metric) const {
  std::vector<IndexEntry> entries;
  entries.reserve(size());
  for (const ViewRecord& r : manifest_.views) entries.push_back({r.id, r.pose});
  return PoseIndex::build(std::move(entries), metric);
}

json synthesis_provenance(const std::string& source_id, Method method, double bdd) {
  return {{"synthesized_from", source_id}, {"method", method_name(method)}, {"bdd", bdd}};
}

DatasetManifest append_views(const DatasetManifest& manifest, const std::vector<NewView>& views,
                             const fs::path& output_dir) {
  std::set<std::string> ids;
  for (const ViewRecord& r : manifest.views) ids.insert(r.id);
  for (const NewView& v : views) {
    if (!ids.insert(v.id).second) {
      throw Error(ErrorCode::IdCollision, "view id '" + v.id + "' already exists");
    }
  }
  DatasetManifest out = manifest;
  if (views.empty()) return out;
  std::error_code ec;
  fs::create_directories(output_dir / "images", ec);
  fs::create_directories(output_dir / "masks", ec);
  fs::create_directories(output_dir / "depth", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + output_dir.string());
  for (const NewView& v : views) {
    if (v.view.intrinsics != manifest.intrinsics) {
      throw Error(ErrorCode::InvalidArgument, "appended view '" + v.id + "' has other intrinsics");
    }
    ViewRecord r;
    r.id = v.id;
    r.pose = v.view.pose;
    r.image = fs::absolute(output_dir / "images" / (v.id + ".png")).lexically_normal();
    save_png(v.view.image, r.image);
    if (v.view.mask) {
      r.mask = fs::absolute(output_dir / "masks" / (v.id + ".png")).lexically_normal();
      save_mask_png(*v.view.mask, *r.mask);
    }
    if (v.view.depth) {
      r.depth = fs::absolute(output_dir / "depth" / (v.id + ".depth")).lexically_normal();
      save_depth(*v.view.depth, *r.depth);
    }
    r.provenance = v.provenance;
    out.views.push_back(std::move(r));
  }
  out.validate();
  return out;
}

SceneDataset make_synthetic_scene(const SceneDatasetConfig& config, const fs::path& output_dir) {
  if (config.n_views < 1) throw Error(ErrorCode::InvalidArgument, "n_views must be >= 1");
  config.intrinsics.validate();
  const SyntheticScene scene(config.scene);
  SceneDataset out;
  out.mesh = scene.mesh();

  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + output_dir.string());
  const fs::path mesh_path = fs::absolute(output_dir / "mesh.obj").lexically_normal();
  save_obj(scene.mesh(), mesh_path);

  DatasetManifest m;
  m.name = config.name;
  m.intrinsics = config.intrinsics;
  m.mesh = mesh_path;
  m.keypoints = scene.keypoints();
  m.synthetic = config.scene;

  const std::vector<Pose> poses = sample_poses(config.n_views, config.poses);
  std::vector<NewView> views;
  views.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    views.push_back({fmt::format("v{:04d}", i),
                     scene.render(poses[i], config.intrinsics, config.supersample), nullptr});
  }
  out.manifest = append_views(m, views, output_dir);
  save_manifest(out.manifest, output_dir / "manifest.json");
  spdlog::debug("rendered {} views of a {} scene into {}", views.size(),
                scene_kind_name(config.scene.kind), output_dir.string());
  return out;
}

DatasetManifest import_speedplus(const fs::path& labels, const fs::path& camera,
                                 const fs::path& image_dir, const std::string& name) {
  const json cam = read_json(camera);
  const json& km = require(cam, "cameraMatrix", "camera.");
  if (!km.is_array() || km.size() != 3) schema_error("camera.cameraMatrix", "expected 3x3");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < 3; ++i) {
    rows.push_back(numbers(km[i], 3, "camera.cameraMatrix[" + std::to_string(i) + "]"));
  }
  DatasetManifest m;
  m.name = name;
  m.intrinsics.fx = rows[0][0];
  m.intrinsics.fy = rows[1][1];
  m.intrinsics.px = rows[0][2];
  m.intrinsics.py = rows[1][2];
  m.intrinsics.width = integer(require(cam, "Nu", "camera."), "camera.Nu");
  m.intrinsics.height = integer(require(cam, "Nv", "camera."), "camera.Nv");

  const json lj = read_json(labels);
  if (!lj.is_array()) schema_error("labels", "expected an array");
  for (std::size_t i = 0; i < lj.size(); ++i) {
    const std::string field = "labels[" + std::to_string(i) + "]";
    const json& e = lj[i];
    ViewRecord r;
    const std::string file = string_field(require(e, "filename", field + "."), field + ".filename");
    r.id = fs::path(file).stem().string();
    r.image = fs::absolute(image_dir / file).lexically_normal();
    if (!fs::exists(r.image)) {
      throw Error(ErrorCode::MissingFile, field + ".filename: " + r.image.string() + " not found");
    }
    r.pose.rotation =
        parse_quaternion(require(e, "q_vbs2tango_true", field + "."), field + ".q_vbs2tango_true");
    const std::vector<double> t =
        numbers(require(e, "r_Vo2To_vbs_true", field + "."), 3, field + ".r_Vo2To_vbs_true");
    r.pose.translation = Vec3(t[0], t[1], t[2]);
    m.views.push_back(std::move(r));
  }
  m.validate();
  return m;
}

}  // namespace visyreve
