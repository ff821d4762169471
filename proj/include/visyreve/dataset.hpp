#pragma once

// Pose-labeled image datasets and their JSON manifest.
//
// manifest.json (schema 1); relative paths are relative to the manifest:
//   {
//     "schema": 1,
//     "name": "...",
//     "intrinsics": {"fx":..,"fy":..,"px":..,"py":..,"width":..,"height":..},
//     "mesh": "mesh.obj",                              (optional)
//     "keypoints_3d": [{"name": "c0", "xyz": [x,y,z]}], (optional)
//     "synthetic": {"kind": "cube", "texture_seed": 7}, (optional)
//     "views": [{"id": "v0000", "image": "images/v0000.png",
//                "q_wxyz": [w,x,y,z], "t_xyz": [x,y,z],
//                "mask": "...", "depth": "...",          (optional)
//                "provenance": {...}}]                   (optional)
//   }
// Poses are target-to-camera with a scalar-first quaternion.

#include <cstddef>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "visyreve/geometry.hpp"
#include "visyreve/meshrender.hpp"
#include "visyreve/nnindex.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/scene.hpp"
#include "visyreve/synthesis.hpp"

namespace visyreve {

inline constexpr int kManifestSchema = 1;

struct ViewRecord {
  std::string id;
  std::filesystem::path image;  // absolute once loaded
  Pose pose;
  std::optional<std::filesystem::path> mask;
  std::optional<std::filesystem::path> depth;
  /// Null for captured views; {"synthesized_from", "method", "bdd"} for
  /// synthesized ones.
  nlohmann::json provenance;
};

struct DatasetManifest {
  std::string name;
  Intrinsics intrinsics;
  std::optional<std::filesystem::path> mesh;
  std::optional<KeypointSet> keypoints;
  /// Present when the dataset was generated procedurally, so ground truth can
  /// be re-rendered at any pose.
  std::optional<SceneSpec> synthetic;
  std::vector<ViewRecord> views;

  /// Throws SchemaError on duplicate ids, non-positive t_z or bad intrinsics.
  void validate() const;
  std::vector<Pose> poses() const;
  /// Position of `id`; throws InvalidArgument if absent.
  std::size_t find(const std::string& id) const;
};

/// {"q_wxyz": [w,x,y,z], "t_xyz": [x,y,z]}. Throws SchemaError or BadQuaternion.
Pose pose_from_json(const nlohmann::json& j, const std::string& field = "pose");
nlohmann::json pose_to_json(const Pose& pose);
/// A JSON file holding one pose object.
Pose load_pose(const std::filesystem::path& path);

/// Throws SchemaError (naming the field), MissingFile, BadQuaternion (norm
/// off by more than 1e-6) or ParseError for malformed JSON.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest's directory when possible.
/// Doubles use the shortest representation that parses back bit-exactly.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Manifest plus a bounded, thread-safe LRU cache of decoded views.
class Dataset {
 public:
  explicit Dataset(DatasetManifest manifest, std::size_t cache_capacity = 64);
  static Dataset open(const std::filesystem::path& manifest_path,
                      std::size_t cache_capacity = 64);

  const DatasetManifest& manifest() const { return manifest_; }
  std::size_t size() const { return manifest_.views.size(); }
  const ViewRecord& record(std::size_t i) const { return manifest_.views.at(i); }

  /// Image, mask and depth of view `i` (keypoints_2d unset).
  std::shared_ptr<const View> view(std::size_t i) const;
  std::optional<TriangleMesh> load_mesh() const;
  PoseIndex index(const DistanceKind& metric = DistanceKind::bdd()) const;

  std::size_t cache_size() const;

 private:
  DatasetManifest manifest_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<std::size_t> lru_;
  mutable std::unordered_map<std::size_t,
                             std::pair<std::shared_ptr<const View>, std::list<std::size_t>::iterator>>
      cache_;
};

struct NewView {
  std::string id;
  View view;
  nlohmann::json provenance;
};

nlohmann::json synthesis_provenance(const std::string& source_id, Method method, double bdd);

/// Writes each view's image (and mask/depth when present) under `output_dir`
/// and returns `manifest` extended by the new records. Throws IdCollision for
/// ids already present or repeated, IoError on write failures.
DatasetManifest append_views(const DatasetManifest& manifest, const std::vector<NewView>& views,
                             const std::filesystem::path& output_dir);

/// Renders `n_views` ground-truth views of a procedural scene into
/// `output_dir` (images/, masks/, depth/, mesh.obj, manifest.json).
struct SceneDatasetConfig {
  SceneSpec scene;
  Intrinsics intrinsics{300.0, 300.0, 127.5, 127.5, 256, 256};
  std::size_t n_views = 1;
  PoseSamplerConfig poses;
  int supersample = 2;
  std::string name = "synthetic";
};

struct SceneDataset {
  DatasetManifest manifest;
  TriangleMesh mesh;
};

SceneDataset make_synthetic_scene(const SceneDatasetConfig& config,
                                  const std::filesystem::path& output_dir);

/// Converts SPEED+-style labels (a JSON list of {"filename",
/// "q_vbs2tango_true", "r_Vo2To_vbs_true"}) and camera file ({"cameraMatrix",
/// "Nu", "Nv"}) into a manifest. The label quaternion is scalar-first and
/// maps target coordinates into the camera frame, so it is used as is.
DatasetManifest import_speedplus(const std::filesystem::path& labels,
                                 const std::filesystem::path& camera,
                                 const std::filesystem::path& image_dir, const std::string& name);

}  // namespace visyreve
