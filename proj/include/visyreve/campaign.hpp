#pragma once

// Experiments over datasets: Monte-Carlo sample replacement, performance
// thresholds, correlation tables, densification, trajectory synthesis and
// runtime benchmarks.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "visyreve/dataset.hpp"
#include "visyreve/density.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/runinfo.hpp"
#include "visyreve/synthesis.hpp"
#include "visyreve/trajectory.hpp"

namespace visyreve {

inline constexpr double kConfidence2Sigma = 0.9545;
inline constexpr double kConfidence3Sigma = 0.9973;

struct Thresholds {
  double kps_vbn_req = 0.01;  // pass iff kps_vbn < req
  double iou_req = 0.9;       // pass iff iou > req
  double ssim_req = 0.9;      // pass iff ssim > req
};

struct McConfig {
  std::size_t n_pairs = 500;
  double bdd_cap = 0.5;
  Method method = Method::Homography;
  std::uint64_t seed = 1;
  Thresholds thresholds;
  double confidence = kConfidence3Sigma;
  /// Weight of C-L2 in the combined distance (1/m); has no default.
  double spec_weight = std::numeric_limits<double>::quiet_NaN();
  SynthesisOptions options;
  int threads = 1;

  /// Throws InvalidArgument.
  void validate() const;
};

struct McRow {
  std::size_t pair_id = 0;
  std::size_t source = 0;  // dataset positions
  std::size_t target = 0;
  std::string source_id;
  std::string target_id;
  QualityReport quality;
  SynthesisTiming timing;
};

enum class QualityMetric { KpsVbn, Iou, Ssim };
std::string_view metric_name(QualityMetric m);

struct Requirement {
  QualityMetric metric = QualityMetric::KpsVbn;
  double value = 0.01;

  bool passes(const QualityReport& q) const;
};

std::vector<Requirement> requirements(const Thresholds& t);

struct ThresholdEntry {
  Requirement requirement;
  Method method = Method::Homography;
  double confidence = kConfidence3Sigma;
  double max_bdd = 0.0;
};

struct PerformanceModel {
  std::vector<McRow> rows;  // ordered by pair_id
  std::vector<ThresholdEntry> thresholds;
};

/// Draws `n_pairs` (target, source) pairs of distinct views with BDD below
/// the cap by rejection from uniform index pairs (budget 100 x n_pairs),
/// synthesizes each target from its source and scores it.
/// Throws InsufficientPairs when the budget runs out.
PerformanceModel run_mc(const Dataset& dataset, const McConfig& config, const TriangleMesh* mesh,
                        const KeypointSet& kps);

/// Largest BDD b such that, among the rows with bdd <= b (at least 100 of
/// them), the fraction meeting `requirement` is at least `confidence`; 0 when
/// no such b exists. Throws TooFewSamples for fewer than 100 rows.
double extract_threshold(const std::vector<QualityReport>& rows, const Requirement& requirement,
                         double confidence);

/// Throws DegenerateVariance for fewer than 3 values or zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson correlation of the ranks (ties get their mean rank).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

enum class DistanceColumn { Bdd, Cl2, RotMag, Spec };
enum class MetricColumn { KpsL2, KpsVbn, Iou, Ssim };

struct CorrelationTable {
  static constexpr DistanceColumn kDistances[4] = {DistanceColumn::Bdd, DistanceColumn::Cl2,
                                                   DistanceColumn::RotMag, DistanceColumn::Spec};
  static constexpr MetricColumn kMetrics[4] = {MetricColumn::KpsL2, MetricColumn::KpsVbn,
                                               MetricColumn::Iou, MetricColumn::Ssim};
  double r[4][4] = {};  // [distance][metric]

  double at(DistanceColumn d, MetricColumn m) const { return r[int(d)][int(m)]; }
};

double distance_column(const QualityReport& q, DistanceColumn d);
double metric_column(const QualityReport& q, MetricColumn m);

/// Pearson r for every distance/metric combination. With `strict` a
/// degenerate column throws DegenerateVariance; otherwise its cells are NaN.
CorrelationTable correlations(const std::vector<QualityReport>& rows, bool strict = true);

struct DensifyConfig {
  double target_lb_bdd = 0.2;
  Method method = Method::Transform3d;
  double bdd_cap = 0.5;
  std::size_t max_iterations = 1000;
  SynthesisOptions options;
  std::string id_prefix = "syn";
  int threads = 1;
};

struct DensifyStep {
  std::string id;
  std::string source_id;
  double bdd = 0.0;            // BDD between the new view and its source
  double lb_bdd_before = 0.0;  // LB-BDD before this view was added
};

struct DensifyResult {
  DatasetManifest manifest;
  std::vector<DensifyStep> steps;
  DensityReport initial;
  DensityReport final;
};

/// Repeatedly fills the largest empty BDD-ball: the ball center becomes the
/// attitude of a new view whose range copies its BDD nearest neighbor among
/// the original views, and the view is synthesized from that neighbor.
/// Throws InvalidArgument unless the target is positive, TargetUnreachable
/// if the neighbor is not below the BDD cap and MaxIterationsExceeded.
DensifyResult densify(const Dataset& dataset, const DensifyConfig& config,
                      const BaselineSampling& baseline, const TriangleMesh* mesh,
                      const std::filesystem::path& output_dir);

struct TrajectoryFrame {
  double time = 0.0;
  Pose pose;
  std::string source_id;
  double bdd = 0.0;
  SynthesisTiming timing;
  double load_seconds = 0.0;
  std::optional<QualityReport> quality;  // when ground truth can be rendered
};

using FrameSink = std::function<void(const TrajectoryFrame&, const SynthesisResult&)>;

struct TrajectoryConfig {
  Method method = Method::Transform3d;
  SynthesisOptions options;
  double bdd_cap = 0.5;
  /// Weight of C-L2 in the combined distance for per-frame reports.
  double spec_weight = 1.0;
  /// Render ground truth and score frames when the dataset is procedural.
  bool evaluate = true;
};

/// Synthesizes every sample from its BDD nearest neighbor in the dataset.
/// Ground truth is rendered when the manifest describes a procedural scene.
/// Throws NoValidSource when a sample has no neighbor below the cap.
std::vector<TrajectoryFrame> synthesize_trajectory(const Dataset& dataset,
                                                   const std::vector<TrajectorySample>& samples,
                                                   const TrajectoryConfig& config,
                                                   const TriangleMesh* mesh,
                                                   const FrameSink& sink = {});

struct BenchConfig {
  Method method = Method::Homography;
  std::size_t n_samples = 500;
  /// Homography: mask the input with the rendered source depth.
  bool mask_input = false;
  /// 3D Transform: fill gaps.
  bool interpolate = true;
  std::uint64_t seed = 1;
};

struct TimingStats {
  double mean = 0.0;
  double p95 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

TimingStats timing_stats(std::vector<double> seconds);

struct BenchResult {
  std::size_t n_samples = 0;
  TimingStats total;  // per-frame synthesis latency, including depth rendering
  TimingStats render;
  TimingStats warp;
  TimingStats interpolate;
  TimingStats load;  // image decoding, reported separately
  std::vector<TrajectoryFrame> frames;
};

/// Single-threaded synthesis along a random cubic spline around the target.
BenchResult bench(const Dataset& dataset, const BenchConfig& config, const TriangleMesh* mesh);

/// CSV writers; each file starts with the run's comment line.
void write_mc_csv(const std::vector<McRow>& rows, const std::filesystem::path& path,
                  const RunInfo& run);
void write_mc_timings_csv(const std::vector<McRow>& rows, const std::filesystem::path& path,
                          const RunInfo& run);
void write_threshold_csv(const std::vector<ThresholdEntry>& entries,
                         const std::filesystem::path& path, const RunInfo& run);
void write_correlation_csv(const CorrelationTable& table, const std::filesystem::path& path,
                           const RunInfo& run);

}  // namespace visyreve
