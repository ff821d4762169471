// visyreve command-line tool: dataset generation and import, pose distances,
// density analysis, view synthesis and the experiment campaigns.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "visyreve/campaign.hpp"
#include "visyreve/dataset.hpp"
#include "visyreve/density.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/runinfo.hpp"
#include "visyreve/scene.hpp"
#include "visyreve/synthesis.hpp"
#include "visyreve/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace visyreve;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = ".";
  std::string log_level = "info";
};

// Options that do not change any output byte stay out of the config hash.
const std::vector<std::string> kUnhashed = {"--output-dir", "--threads", "--log-level", "--help", "--version"};

std::string canonical_config(const CLI::App& app, const CLI::App& sub) {
  std::map<std::string, std::string> entries;
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_name();
      if (std::find(kUnhashed.begin(), kUnhashed.end(), name) != kUnhashed.end()) continue;
      std::string value;
      for (const std::string& r : opt->results()) value += (value.empty() ? "" : " ") + r;
      if (value.empty()) value = opt->get_default_str();
      entries[name] = value;
    }
  };
  collect(app);
  collect(sub);
  std::string out = sub.get_name();
  for (const auto& [k, v] : entries) out += "\n" + k + "=" + v;
  return out;
}

fs::path output_dir(const Globals& g) {
  const fs::path dir = g.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void write_run_json(const RunInfo& run, const std::string& command, const std::string& config,
                    const fs::path& dir, json extra = json::object()) {
  json j = run.to_json();
  j["command"] = command;
  j["config"] = config;
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(j, dir / "run.json");
}

Method method_option(const std::string& name) { return parse_method(name); }

double confidence_option(const std::string& s) {
  if (s == "2sigma") return kConfidence2Sigma;
  if (s == "3sigma") return kConfidence3Sigma;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "confidence must be 2sigma, 3sigma or a number");
}

std::optional<TriangleMesh> mesh_for(const Dataset& ds, const std::string& mesh_path) {
  if (!mesh_path.empty()) return load_obj(mesh_path);
  return ds.load_mesh();
}

KeypointSet keypoints_for(const Dataset& ds) {
  if (ds.manifest().keypoints) return *ds.manifest().keypoints;
  if (ds.manifest().synthetic) return SyntheticScene(*ds.manifest().synthetic).keypoints();
  throw Error(ErrorCode::SchemaError, "keypoints_3d: the dataset has no 3D keypoints");
}

std::string csv_or_empty(const std::optional<QualityReport>& q, double QualityReport::*field) {
  return q ? format_double((*q).*field) : std::string();
}

void write_frames_csv(const std::vector<TrajectoryFrame>& frames, const fs::path& path,
                      const RunInfo& run) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << run.comment_line() << '\n';
  out << "frame,time,source_id,bdd,load_s,render_s,warp_s,interpolate_s,total_s,ssim,iou,kps_l2,"
         "kps_vbn\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const TrajectoryFrame& f = frames[i];
    out << i << ',' << format_double(f.time) << ',' << f.source_id << ',' << format_double(f.bdd)
        << ',' << format_double(f.load_seconds) << ',' << format_double(f.timing.render) << ','
        << format_double(f.timing.warp) << ',' << format_double(f.timing.interpolate) << ','
        << format_double(f.timing.total) << ',' << csv_or_empty(f.quality, &QualityReport::ssim)
        << ',' << csv_or_empty(f.quality, &QualityReport::iou) << ','
        << csv_or_empty(f.quality, &QualityReport::kps_l2) << ','
        << csv_or_empty(f.quality, &QualityReport::kps_vbn) << '\n';
  }
  if (!out.flush()) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

json stats_json(const TimingStats& s) {
  return {{"mean", s.mean}, {"p95", s.p95}, {"min", s.min}, {"max", s.max}};
}

void log_stats(const char* name, const TimingStats& s) {
  fmt::print("{:<12} mean {:.6f} s  p95 {:.6f} s  min {:.6f} s  max {:.6f} s\n", name, s.mean,
             s.p95, s.min, s.max);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visyreve: view synthesis and pose-distance tools for vision-based navigation datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->envname("VISYREVE_SEED")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for MC, density and densify")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for output files")
      ->envname("VISYREVE_OUTPUT_DIR")
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  const auto methods = CLI::IsMember({"homography", "hom", "3dt"});

  // bdd
  CLI::App* bdd_cmd = app.add_subcommand("bdd", "Print BDD, C-L2, rotation magnitude and SPEC of two poses");
  std::string pose_a, pose_b, bdd_dataset;
  std::vector<std::string> bdd_ids;
  double bdd_weight = 1.0;
  bool bdd_json = false;
  auto* pa = bdd_cmd->add_option("--pose-a", pose_a, "JSON pose file {q_wxyz, t_xyz}")->check(CLI::ExistingFile);
  auto* pb = bdd_cmd->add_option("--pose-b", pose_b, "JSON pose file {q_wxyz, t_xyz}")->check(CLI::ExistingFile);
  auto* bd = bdd_cmd->add_option("--dataset", bdd_dataset, "Manifest to take both poses from")->check(CLI::ExistingFile);
  auto* bi = bdd_cmd->add_option("--ids", bdd_ids, "Two view ids in --dataset")->expected(2);
  pa->needs(pb);
  pb->needs(pa);
  bd->needs(bi);
  bi->needs(bd);
  pa->excludes(bd);
  bdd_cmd->add_option("--spec-weight", bdd_weight, "Weight of C-L2 in SPEC (1/m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bdd_cmd->add_flag("--json", bdd_json, "Machine-readable output");

  // density
  CLI::App* density_cmd = app.add_subcommand("density", "LB-BDD and density of a dataset against a blue-noise baseline");
  std::string density_dataset;
  std::size_t baseline_size = kDefaultBaselineSize, candidates = kDefaultBaselineCandidates;
  density_cmd->add_option("--dataset", density_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  density_cmd->add_option("--baseline-size", baseline_size, "Baseline rotations")->check(CLI::PositiveNumber)->capture_default_str();
  density_cmd->add_option("--candidates", candidates, "Best-candidate draws per baseline rotation")->check(CLI::PositiveNumber)->capture_default_str();

  // synth
  CLI::App* synth_cmd = app.add_subcommand("synth", "Synthesize one view at a target pose");
  std::string synth_dataset, target_pose_file, target_id, source_id, synth_method = "3dt", synth_mesh,
      synth_out = "synth";
  bool synth_debug = false, no_interpolate = false, mask_with_mesh = false, fill_target = false;
  synth_cmd->add_option("--dataset", synth_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  auto* tp = synth_cmd->add_option("--target-pose", target_pose_file, "JSON pose file")->check(CLI::ExistingFile);
  auto* ti = synth_cmd->add_option("--target-id", target_id, "Use the pose of this view as the target");
  tp->excludes(ti);
  synth_cmd->add_option("--source-id", source_id, "Source view (default: BDD nearest neighbor)");
  synth_cmd->add_option("--method", synth_method, "homography or 3dt")->check(methods)->capture_default_str();
  synth_cmd->add_option("--mesh", synth_mesh, "OBJ mesh (default: the manifest's mesh)")->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "Output file stem")->capture_default_str();
  synth_cmd->add_flag("--debug", synth_debug, "Also write the per-pixel valid map");
  synth_cmd->add_flag("--no-interpolate", no_interpolate, "3DT: leave gaps unfilled");
  synth_cmd->add_flag("--mask-with-mesh", mask_with_mesh, "Homography: mask the source with its rendered depth");
  synth_cmd->add_flag("--fill-target-object", fill_target, "3DT: fill every gap covered by the target depth");

  // mc
  CLI::App* mc_cmd = app.add_subcommand("mc", "Monte-Carlo sample replacement");
  std::string mc_dataset, mc_method = "homography", mc_confidence = "3sigma", mc_mesh;
  McConfig mc;
  mc_cmd->add_option("--dataset", mc_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  mc_cmd->add_option("--pairs", mc.n_pairs, "Number of pairs")->check(CLI::PositiveNumber)->capture_default_str();
  mc_cmd->add_option("--bdd-cap", mc.bdd_cap, "Pairs are drawn below this BDD")->capture_default_str();
  mc_cmd->add_option("--method", mc_method, "homography or 3dt")->check(methods)->capture_default_str();
  mc_cmd->add_option("--confidence", mc_confidence, "2sigma, 3sigma or a fraction")->capture_default_str();
  mc_cmd->add_option("--spec-weight", mc.spec_weight, "Weight of C-L2 in SPEC (1/m)")->required()->check(CLI::PositiveNumber);
  mc_cmd->add_option("--kps-vbn-req", mc.thresholds.kps_vbn_req, "Pass iff KPS-VBN below")->capture_default_str();
  mc_cmd->add_option("--iou-req", mc.thresholds.iou_req, "Pass iff IoU above")->capture_default_str();
  mc_cmd->add_option("--ssim-req", mc.thresholds.ssim_req, "Pass iff SSIM above")->capture_default_str();
  mc_cmd->add_option("--mesh", mc_mesh, "OBJ mesh (default: the manifest's mesh)")->check(CLI::ExistingFile);
  mc_cmd->add_flag("--mask-with-mesh", mc.options.mask_with_mesh, "Homography: mask sources with rendered depth");
  bool mc_no_interpolate = false;
  mc_cmd->add_flag("--no-interpolate", mc_no_interpolate, "3DT: leave gaps unfilled");

  // densify
  CLI::App* densify_cmd = app.add_subcommand("densify", "Append synthesized views until LB-BDD reaches a target");
  std::string densify_dataset, densify_method = "3dt", densify_mesh;
  DensifyConfig dc;
  std::size_t densify_baseline = kDefaultBaselineSize, densify_candidates = kDefaultBaselineCandidates;
  densify_cmd->add_option("--dataset", densify_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  densify_cmd->add_option("--target", dc.target_lb_bdd, "Target LB-BDD")->capture_default_str();
  densify_cmd->add_option("--method", densify_method, "homography or 3dt")->check(methods)->capture_default_str();
  densify_cmd->add_option("--bdd-cap", dc.bdd_cap, "Largest allowed source BDD")->capture_default_str();
  densify_cmd->add_option("--max-iterations", dc.max_iterations, "Maximum appended views")->capture_default_str();
  densify_cmd->add_option("--prefix", dc.id_prefix, "Id prefix of new views")->capture_default_str();
  densify_cmd->add_option("--baseline-size", densify_baseline, "Baseline rotations")->check(CLI::PositiveNumber)->capture_default_str();
  densify_cmd->add_option("--candidates", densify_candidates, "Best-candidate draws")->check(CLI::PositiveNumber)->capture_default_str();
  densify_cmd->add_option("--mesh", densify_mesh, "OBJ mesh (default: the manifest's mesh)")->check(CLI::ExistingFile);

  // traj
  CLI::App* traj_cmd = app.add_subcommand("traj", "Synthesize frames along a spline trajectory");
  std::string traj_dataset, waypoints_file, traj_method = "3dt", traj_mesh;
  std::size_t traj_samples = 500, random_waypoints = 8;
  double traj_range_min = 0, traj_range_max = 0, traj_step = 0.3, traj_weight = 1.0, traj_cap = 0.5;
  bool traj_frames = false;
  traj_cmd->add_option("--dataset", traj_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  traj_cmd->add_option("--waypoints", waypoints_file, "JSON list of {time, q_wxyz, t_xyz}")->check(CLI::ExistingFile);
  traj_cmd->add_option("--random-waypoints", random_waypoints, "Waypoints of a random loop when --waypoints is absent")->capture_default_str();
  traj_cmd->add_option("--range-min", traj_range_min, "Random loop: minimum range (default: 0.9 x median dataset range)");
  traj_cmd->add_option("--range-max", traj_range_max, "Random loop: maximum range (default: 1.1 x median dataset range)");
  traj_cmd->add_option("--max-step", traj_step, "Random loop: largest direction change between waypoints (rad)")->capture_default_str();
  traj_cmd->add_option("--samples", traj_samples, "Frames")->check(CLI::PositiveNumber)->capture_default_str();
  traj_cmd->add_option("--method", traj_method, "homography or 3dt")->check(methods)->capture_default_str();
  traj_cmd->add_option("--bdd-cap", traj_cap, "Largest allowed source BDD")->capture_default_str();
  traj_cmd->add_option("--spec-weight", traj_weight, "Weight of C-L2 in SPEC (1/m)")->check(CLI::PositiveNumber)->capture_default_str();
  traj_cmd->add_option("--mesh", traj_mesh, "OBJ mesh (default: the manifest's mesh)")->check(CLI::ExistingFile);
  traj_cmd->add_flag("--frames", traj_frames, "Write every frame as PNG");

  // bench
  CLI::App* bench_cmd = app.add_subcommand("bench", "Single-threaded synthesis latency along a random spline");
  std::string bench_dataset, bench_method = "homography", bench_mesh;
  BenchConfig bc;
  bool bench_no_interpolate = false;
  bench_cmd->add_option("--dataset", bench_dataset, "Manifest")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--method", bench_method, "homography or 3dt")->check(methods)->capture_default_str();
  bench_cmd->add_option("--samples", bc.n_samples, "Frames")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_flag("--mask-input", bc.mask_input, "Homography: mask the input with rendered depth");
  bench_cmd->add_flag("--no-interpolate", bench_no_interpolate, "3DT: skip gap filling");
  bench_cmd->add_option("--mesh", bench_mesh, "OBJ mesh (default: the manifest's mesh)")->check(CLI::ExistingFile);

  // make-scene
  CLI::App* scene_cmd = app.add_subcommand("make-scene", "Render a procedural ground-truth dataset");
  SceneDatasetConfig sc;
  std::string scene_kind = "cube", attitudes = "uniform";
  std::optional<std::uint64_t> texture_seed;
  std::vector<double> hole_center;
  double fx = 300, fy = 0;
  int width = 256, height = 256;
  scene_cmd->add_option("--kind", scene_kind, "cube, plane or two-boxes")
      ->check(CLI::IsMember({"cube", "plane", "two-boxes"}))
      ->capture_default_str();
  scene_cmd->add_option("--texture-seed", texture_seed, "Appearance seed (default: --seed)");
  scene_cmd->add_option("--views", sc.n_views, "Number of views")->check(CLI::PositiveNumber)->capture_default_str();
  scene_cmd->add_option("--width", width, "Image width")->capture_default_str();
  scene_cmd->add_option("--height", height, "Image height")->capture_default_str();
  scene_cmd->add_option("--fx", fx, "Focal length in pixels")->capture_default_str();
  scene_cmd->add_option("--fy", fy, "Vertical focal length (default: fx)");
  scene_cmd->add_option("--range-min", sc.poses.range_min, "Minimum range (m)")->capture_default_str();
  scene_cmd->add_option("--range-max", sc.poses.range_max, "Maximum range (m)")->capture_default_str();
  scene_cmd->add_option("--lateral", sc.poses.lateral, "Lateral offset as a fraction of range")->capture_default_str();
  scene_cmd->add_option("--attitudes", attitudes, "uniform or blue-noise")
      ->check(CLI::IsMember({"uniform", "blue-noise"}))
      ->capture_default_str();
  scene_cmd->add_option("--hole-center", hole_center, "Quaternion w x y z with no views nearby")->expected(4);
  scene_cmd->add_option("--hole-radius", sc.poses.hole_radius, "BDD radius of the empty region")->capture_default_str();
  scene_cmd->add_option("--supersample", sc.supersample, "Antialiasing factor")->check(CLI::PositiveNumber)->capture_default_str();
  scene_cmd->add_option("--name", sc.name, "Dataset name")->capture_default_str();

  // import-speedplus
  CLI::App* import_cmd = app.add_subcommand("import-speedplus", "Convert SPEED+-style labels into a manifest");
  std::string labels, camera, images, import_name = "speedplus";
  import_cmd->add_option("--labels", labels, "Label JSON")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--camera", camera, "Camera JSON")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--images", images, "Image directory")->required()->check(CLI::ExistingDirectory);
  import_cmd->add_option("--name", import_name, "Dataset name")->capture_default_str();

  // validate
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a manifest and decode every view");
  std::string validate_dataset;
  validate_cmd->add_option("--dataset", validate_dataset, "Manifest")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorClass::Usage);
  }

  auto logger = spdlog::stderr_logger_mt("visyreve");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  const CLI::App* sub = app.get_subcommands().front();
  const std::string config = canonical_config(app, *sub);
  const RunInfo run{g.seed, config_hash(config)};

  try {
    if (sub == bdd_cmd) {
      Pose a, b;
      if (!pose_a.empty()) {
        a = load_pose(pose_a);
        b = load_pose(pose_b);
      } else if (!bdd_dataset.empty()) {
        const DatasetManifest m = load_manifest(bdd_dataset);
        a = m.views[m.find(bdd_ids[0])].pose;
        b = m.views[m.find(bdd_ids[1])].pose;
      } else {
        throw Error(ErrorCode::InvalidArgument, "give --pose-a/--pose-b or --dataset with --ids");
      }
      const BddValue v = bdd(a, b);
      const double c = cl2(a, b), r = rotation_magnitude(a, b), s = spec_combined(a, b, bdd_weight);
      if (bdd_json) {
        const json j = {{"bdd", v.value},  {"theta", v.theta}, {"phi", v.phi},
                        {"cl2", c},        {"rotmag", r},      {"spec", s},
                        {"spec_weight", bdd_weight}};
        std::cout << j.dump() << '\n';
      } else {
        fmt::print("bdd    {}\ncl2    {}\nrotmag {}\nspec   {}\n", format_double(v.value),
                   format_double(c), format_double(r), format_double(s));
      }
    } else if (sub == density_cmd) {
      const DatasetManifest m = load_manifest(density_dataset);
      const BaselineSampling base = sample_baseline(baseline_size, candidates, g.seed);
      const DensityReport report = lb_bdd(m.poses(), base, g.threads);
      const fs::path dir = output_dir(g);
      write_density_json(report, base, dir / "density.json", run);
      write_density_csv(report, base, dir / "density.csv", run);
      write_run_json(run, "density", config, dir);
      fmt::print("views {}\nlb_bdd {}\nrho {}\n", m.views.size(), format_double(report.lb_bdd),
                 format_double(report.rho));
    } else if (sub == synth_cmd) {
      const Dataset ds = Dataset::open(synth_dataset);
      Pose target;
      if (!target_pose_file.empty()) {
        target = load_pose(target_pose_file);
      } else if (!target_id.empty()) {
        target = ds.record(ds.manifest().find(target_id)).pose;
      } else {
        throw Error(ErrorCode::InvalidArgument, "give --target-pose or --target-id");
      }
      if (source_id.empty()) source_id = select_source(ds.index(DistanceKind::bdd()), target);
      const std::size_t si = ds.manifest().find(source_id);
      const std::optional<TriangleMesh> mesh = mesh_for(ds, synth_mesh);
      SynthesisOptions opt;
      opt.interpolate = !no_interpolate;
      opt.mask_with_mesh = mask_with_mesh;
      opt.fill_target_object = fill_target;
      const Method method = method_option(synth_method);
      const SynthesisResult r = synthesize(method, *ds.view(si), target, mesh ? &*mesh : nullptr, opt);
      const fs::path dir = output_dir(g);
      save_png(r.image, dir / (synth_out + ".png"));
      save_mask_png(r.transformed_mask, dir / (synth_out + "_mask.png"));
      if (synth_debug) save_png(valid_map_image(r.valid_map), dir / (synth_out + "_valid.png"));
      const double b = bdd_value(ds.record(si).pose.rotation, target.rotation);
      write_run_json(run, "synth", config, dir,
                     {{"source_id", source_id},
                      {"method", method_name(method)},
                      {"bdd", b},
                      {"target_pose", pose_to_json(target)},
                      {"timing",
                       {{"render_s", r.timing.render},
                        {"warp_s", r.timing.warp},
                        {"interpolate_s", r.timing.interpolate},
                        {"total_s", r.timing.total}}}});
      fmt::print("source {}\nbdd {}\ntransformed {}\ninterpolated {}\ngaps {}\n", source_id,
                 format_double(b), r.valid_map.count(PixelState::Transformed),
                 r.valid_map.count(PixelState::Interpolated), r.valid_map.count(PixelState::Gap));
    } else if (sub == mc_cmd) {
      const Dataset ds = Dataset::open(mc_dataset);
      mc.method = method_option(mc_method);
      mc.seed = g.seed;
      mc.threads = g.threads;
      mc.confidence = confidence_option(mc_confidence);
      mc.options.interpolate = !mc_no_interpolate;
      const std::optional<TriangleMesh> mesh = mesh_for(ds, mc_mesh);
      const PerformanceModel pm = run_mc(ds, mc, mesh ? &*mesh : nullptr, keypoints_for(ds));
      const fs::path dir = output_dir(g);
      write_mc_csv(pm.rows, dir / "mc.csv", run);
      write_mc_timings_csv(pm.rows, dir / "mc_timings.csv", run);
      write_threshold_csv(pm.thresholds, dir / "thresholds.csv", run);
      std::vector<QualityReport> reports;
      for (const McRow& r : pm.rows) reports.push_back(r.quality);
      if (reports.size() >= 3) {
        write_correlation_csv(correlations(reports, false), dir / "correlations.csv", run);
      }
      write_run_json(run, "mc", config, dir);
      for (const ThresholdEntry& e : pm.thresholds) {
        fmt::print("{} {} max_bdd {}\n", metric_name(e.requirement.metric),
                   format_double(e.requirement.value), format_double(e.max_bdd));
      }
      if (pm.thresholds.empty()) spdlog::warn("fewer than 100 pairs: no thresholds extracted");
    } else if (sub == densify_cmd) {
      const Dataset ds = Dataset::open(densify_dataset);
      dc.method = method_option(densify_method);
      dc.threads = g.threads;
      const BaselineSampling base = sample_baseline(densify_baseline, densify_candidates, g.seed);
      const std::optional<TriangleMesh> mesh = mesh_for(ds, densify_mesh);
      const fs::path dir = output_dir(g);
      const DensifyResult res = densify(ds, dc, base, mesh ? &*mesh : nullptr, dir);
      save_manifest(res.manifest, dir / "manifest.json");
      std::ofstream out(dir / "densify.csv");
      if (!out) throw Error(ErrorCode::IoError, "cannot write densify.csv");
      out << run.comment_line() << '\n' << "id,source_id,bdd,lb_bdd_before\n";
      for (const DensifyStep& s : res.steps) {
        out << s.id << ',' << s.source_id << ',' << format_double(s.bdd) << ','
            << format_double(s.lb_bdd_before) << '\n';
      }
      if (!out.flush()) throw Error(ErrorCode::IoError, "short write to densify.csv");
      write_run_json(run, "densify", config, dir,
                     {{"initial_lb_bdd", res.initial.lb_bdd},
                      {"final_lb_bdd", res.final.lb_bdd},
                      {"appended", res.steps.size()}});
      fmt::print("appended {}\nlb_bdd {} -> {}\nrho {} -> {}\n", res.steps.size(),
                 format_double(res.initial.lb_bdd), format_double(res.final.lb_bdd),
                 format_double(res.initial.rho), format_double(res.final.rho));
    } else if (sub == traj_cmd) {
      const Dataset ds = Dataset::open(traj_dataset);
      Trajectory tr = [&] {
        if (!waypoints_file.empty()) {
          std::ifstream in(waypoints_file);
          json j;
          try {
            in >> j;
          } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, waypoints_file + ": " + e.what());
          }
          if (!j.is_array()) throw Error(ErrorCode::SchemaError, "waypoints: expected an array");
          std::vector<double> times;
          std::vector<Pose> poses;
          for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string field = "waypoints[" + std::to_string(i) + "]";
            if (!j[i].contains("time") || !j[i]["time"].is_number()) {
              throw Error(ErrorCode::SchemaError, field + ".time: missing");
            }
            times.push_back(j[i]["time"].get<double>());
            poses.push_back(pose_from_json(j[i], field));
          }
          return Trajectory::through(times, poses);
        }
        std::vector<double> ranges;
        for (const Pose& p : ds.manifest().poses()) ranges.push_back(p.range());
        std::nth_element(ranges.begin(), ranges.begin() + ranges.size() / 2, ranges.end());
        const double median = ranges[ranges.size() / 2];
        return random_trajectory(random_waypoints, traj_range_min > 0 ? traj_range_min : 0.9 * median,
                                 traj_range_max > 0 ? traj_range_max : 1.1 * median, traj_step,
                                 g.seed);
      }();
      TrajectoryConfig tc;
      tc.method = method_option(traj_method);
      tc.bdd_cap = traj_cap;
      tc.spec_weight = traj_weight;
      const std::optional<TriangleMesh> mesh = mesh_for(ds, traj_mesh);
      const fs::path dir = output_dir(g);
      if (traj_frames) fs::create_directories(dir / "frames");
      std::size_t n = 0;
      const auto frames = synthesize_trajectory(
          ds, tr.sample(traj_samples), tc, mesh ? &*mesh : nullptr,
          [&](const TrajectoryFrame& f, const SynthesisResult& r) {
            if (traj_frames) save_png(r.image, dir / "frames" / fmt::format("{:05d}.png", n));
            spdlog::debug("frame {} t={:.4f} source {} bdd {:.4f} {:.4f} s", n, f.time, f.source_id,
                          f.bdd, f.timing.total);
            ++n;
          });
      write_frames_csv(frames, dir / "traj.csv", run);
      std::vector<double> totals;
      for (const TrajectoryFrame& f : frames) totals.push_back(f.timing.total);
      const TimingStats st = timing_stats(totals);
      write_run_json(run, "traj", config, dir, {{"frames", frames.size()}, {"total_s", stats_json(st)}});
      log_stats("total", st);
    } else if (sub == bench_cmd) {
      const Dataset ds = Dataset::open(bench_dataset);
      bc.method = method_option(bench_method);
      bc.interpolate = !bench_no_interpolate;
      bc.seed = g.seed;
      const std::optional<TriangleMesh> mesh = mesh_for(ds, bench_mesh);
      const BenchResult r = bench(ds, bc, mesh ? &*mesh : nullptr);
      const fs::path dir = output_dir(g);
      write_frames_csv(r.frames, dir / "bench_frames.csv", run);
      std::ofstream out(dir / "bench.csv");
      if (!out) throw Error(ErrorCode::IoError, "cannot write bench.csv");
      out << run.comment_line() << '\n' << "stage,mean_s,p95_s,min_s,max_s\n";
      const std::pair<const char*, const TimingStats*> rows[] = {
          {"total", &r.total}, {"render", &r.render}, {"warp", &r.warp},
          {"interpolate", &r.interpolate}, {"load", &r.load}};
      for (const auto& [name, s] : rows) {
        out << name << ',' << format_double(s->mean) << ',' << format_double(s->p95) << ','
            << format_double(s->min) << ',' << format_double(s->max) << '\n';
      }
      if (!out.flush()) throw Error(ErrorCode::IoError, "short write to bench.csv");
      write_run_json(run, "bench", config, dir,
                     {{"samples", r.n_samples},
                      {"width", ds.manifest().intrinsics.width},
                      {"height", ds.manifest().intrinsics.height},
                      {"total_s", stats_json(r.total)}});
      fmt::print("{} frames at {}x{}, {}\n", r.n_samples, ds.manifest().intrinsics.width,
                 ds.manifest().intrinsics.height, method_name(bc.method));
      for (const auto& [name, s] : rows) log_stats(name, *s);
    } else if (sub == scene_cmd) {
      sc.scene = {parse_scene_kind(scene_kind), texture_seed.value_or(g.seed)};
      sc.intrinsics = {fx, fy > 0 ? fy : fx, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
      sc.poses.seed = g.seed;
      sc.poses.attitudes = attitudes == "uniform" ? PoseSamplerConfig::Attitudes::Uniform
                                                  : PoseSamplerConfig::Attitudes::BlueNoise;
      if (!hole_center.empty()) {
        const Quaternion q(hole_center[0], hole_center[1], hole_center[2], hole_center[3]);
        sc.poses.hole_center = q;
      }
      const fs::path dir = output_dir(g);
      const SceneDataset sd = make_synthetic_scene(sc, dir);
      write_run_json(run, "make-scene", config, dir);
      fmt::print("{} views written to {}\n", sd.manifest.views.size(), (dir / "manifest.json").string());
    } else if (sub == import_cmd) {
      const DatasetManifest m = import_speedplus(labels, camera, images, import_name);
      const fs::path dir = output_dir(g);
      save_manifest(m, dir / "manifest.json");
      fmt::print("{} views imported\n", m.views.size());
    } else if (sub == validate_cmd) {
      const Dataset ds = Dataset::open(validate_dataset, 1);
      std::size_t masks = 0, depths = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto v = ds.view(i);
        v->validate();
        masks += v->mask.has_value();
        depths += v->depth.has_value();
      }
      if (const auto mesh = ds.load_mesh()) fmt::print("mesh {} triangles\n", mesh->triangles.size());
      fmt::print("{}: {} views ({} masks, {} depth maps) ok\n", ds.manifest().name, ds.size(), masks,
                 depths);
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    spdlog::error("IoError: {}", e.what());
    return static_cast<int>(ErrorClass::Io);
  } catch (const json::exception& e) {
    spdlog::error("SchemaError: {}", e.what());
    return static_cast<int>(ErrorClass::Data);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
