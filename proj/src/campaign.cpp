#include "visyreve/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"
#include "visyreve/scene.hpp"

namespace visyreve {

namespace fs = std::filesystem;

void McConfig::validate() const {
  if (n_pairs < 1) throw Error(ErrorCode::InvalidArgument, "n_pairs must be >= 1");
  if (!(bdd_cap > 0.0 && bdd_cap <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "bdd_cap must lie in (0, 1]");
  }
  if (!(confidence > 0.0 && confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence must lie in (0, 1]");
  }
  if (!(thresholds.kps_vbn_req > 0.0) || !(thresholds.iou_req >= 0.0 && thresholds.iou_req <= 1.0) ||
      !(thresholds.ssim_req >= -1.0 && thresholds.ssim_req <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "requirement thresholds out of range");
  }
  if (!(spec_weight > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "spec_weight must be set to a positive value");
  }
}

std::string_view metric_name(QualityMetric m) {
  switch (m) {
    case QualityMetric::KpsVbn: return "kps_vbn";
    case QualityMetric::Iou: return "iou";
    case QualityMetric::Ssim: return "ssim";
  }
  return "kps_vbn";
}

bool Requirement::passes(const QualityReport& q) const {
  switch (metric) {
    case QualityMetric::KpsVbn: return q.kps_vbn < value;
    case QualityMetric::Iou: return q.iou > value;
    case QualityMetric::Ssim: return q.ssim > value;
  }
  return false;
}

std::vector<Requirement> requirements(const Thresholds& t) {
  return {{QualityMetric::KpsVbn, t.kps_vbn_req},
          {QualityMetric::Iou, t.iou_req},
          {QualityMetric::Ssim, t.ssim_req}};
}

PerformanceModel run_mc(const Dataset& dataset, const McConfig& config, const TriangleMesh* mesh,
                        const KeypointSet& kps) {
  config.validate();
  kps.validate();
  const std::size_t n = dataset.size();
  if (n < 2) throw Error(ErrorCode::InsufficientPairs, "sample replacement needs >= 2 views");

  struct Pair {
    std::size_t target, source;
  };
  std::vector<Pair> pairs;
  pairs.reserve(config.n_pairs);
  Rng rng(config.seed);
  const std::size_t budget = 100 * config.n_pairs;
  std::size_t attempts = 0;
  while (pairs.size() < config.n_pairs) {
    if (attempts++ >= budget) {
      throw Error(ErrorCode::InsufficientPairs,
                  fmt::format("found {} of {} pairs below BDD {} in {} draws", pairs.size(),
                              config.n_pairs, config.bdd_cap, budget));
    }
    const std::size_t t = rng.index(n);
    const std::size_t s = rng.index(n);
    if (s == t) continue;
    if (bdd_value(dataset.record(s).pose.rotation, dataset.record(t).pose.rotation) <
        config.bdd_cap) {
      pairs.push_back({t, s});
    }
  }

  PerformanceModel model;
  model.rows.resize(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  const long count = static_cast<long>(pairs.size());
#pragma omp parallel num_threads(std::max(config.threads, 1))
  {
    DepthRenderer renderer;
#pragma omp for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
      try {
        const Pair& p = pairs[i];
        const auto source = dataset.view(p.source);
        const auto target = dataset.view(p.target);
        McRow& row = model.rows[i];
        row.pair_id = static_cast<std::size_t>(i);
        row.source = p.source;
        row.target = p.target;
        row.source_id = dataset.record(p.source).id;
        row.target_id = dataset.record(p.target).id;
        row.quality = evaluate_pair(*source, *target, config.method, mesh, kps,
                                    config.spec_weight, config.options, &renderer, &row.timing);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (model.rows.size() >= 100) {
    std::vector<QualityReport> reports;
    reports.reserve(model.rows.size());
    for (const McRow& r : model.rows) reports.push_back(r.quality);
    for (const Requirement& req : requirements(config.thresholds)) {
      model.thresholds.push_back(
          {req, config.method, config.confidence, extract_threshold(reports, req, config.confidence)});
    }
  }
  return model;
}

double extract_threshold(const std::vector<QualityReport>& rows, const Requirement& requirement,
                         double confidence) {
  constexpr std::size_t kFloor = 100;
  if (rows.size() < kFloor) {
    throw Error(ErrorCode::TooFewSamples,
                fmt::format("{} rows, at least {} needed", rows.size(), kFloor));
  }
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(rows.size());
  for (const QualityReport& q : rows) sorted.emplace_back(q.bdd, requirement.passes(q));
  std::sort(sorted.begin(), sorted.end());
  double best = 0.0;
  std::size_t passed = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    passed += sorted[i].second;
    // a threshold includes every row with that bdd, so only group ends count
    if (i + 1 < sorted.size() && sorted[i + 1].first == sorted[i].first) continue;
    const std::size_t size = i + 1;
    if (size >= kFloor && double(passed) >= confidence * double(size)) best = sorted[i].first;
  }
  return best;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::CountMismatch, "pearson needs equal lengths");
  if (x.size() < 3) throw Error(ErrorCode::DegenerateVariance, "pearson needs >= 3 samples");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "a correlated variable has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double mean_rank = 0.5 * double(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mean_rank;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

double distance_column(const QualityReport& q, DistanceColumn d) {
  switch (d) {
    case DistanceColumn::Bdd: return q.bdd;
    case DistanceColumn::Cl2: return q.cl2;
    case DistanceColumn::RotMag: return q.rot_mag;
    case DistanceColumn::Spec: return q.spec;
  }
  return 0.0;
}

double metric_column(const QualityReport& q, MetricColumn m) {
  switch (m) {
    case MetricColumn::KpsL2: return q.kps_l2;
    case MetricColumn::KpsVbn: return q.kps_vbn;
    case MetricColumn::Iou: return q.iou;
    case MetricColumn::Ssim: return q.ssim;
  }
  return 0.0;
}

CorrelationTable correlations(const std::vector<QualityReport>& rows, bool strict) {
  CorrelationTable table;
  for (int d = 0; d < 4; ++d) {
    std::vector<double> x;
    for (const QualityReport& q : rows) x.push_back(distance_column(q, CorrelationTable::kDistances[d]));
    for (int m = 0; m < 4; ++m) {
      std::vector<double> y;
      for (const QualityReport& q : rows) y.push_back(metric_column(q, CorrelationTable::kMetrics[m]));
      try {
        table.r[d][m] = pearson(x, y);
      } catch (const Error& e) {
        if (strict || e.code() != ErrorCode::DegenerateVariance) throw;
        table.r[d][m] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return table;
}

DensifyResult densify(const Dataset& dataset, const DensifyConfig& config,
                      const BaselineSampling& baseline, const TriangleMesh* mesh,
                      const fs::path& output_dir) {
  if (!(config.target_lb_bdd > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "target LB-BDD must be positive");
  }
  if (dataset.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot densify an empty dataset");
  std::vector<Quaternion> rotations;
  std::vector<double> ranges;
  for (const ViewRecord& r : dataset.manifest().views) {
    rotations.push_back(r.pose.rotation);
    ranges.push_back(r.pose.range());
  }
  // ball centers carry no translation; queries sit at the mean range on the boresight
  const double mean_range =
      std::accumulate(ranges.begin(), ranges.end(), 0.0) / double(ranges.size());

  DensityTracker tracker(rotations, baseline, config.threads);
  DensifyResult out;
  out.initial = tracker.report();
  out.manifest = dataset.manifest();
  DensityReport report = out.initial;
  const PoseIndex index = dataset.index(DistanceKind::bdd());
  DepthRenderer renderer;

  std::size_t serial = 0;
  auto fresh_id = [&]() {
    for (;;) {
      const std::string id = fmt::format("{}{:04d}", config.id_prefix, serial++);
      const bool taken = std::any_of(out.manifest.views.begin(), out.manifest.views.end(),
                                     [&](const ViewRecord& r) { return r.id == id; });
      if (!taken) return id;
    }
  };

  while (report.lb_bdd > config.target_lb_bdd) {
    if (out.steps.size() >= config.max_iterations) {
      throw Error(ErrorCode::MaxIterationsExceeded,
                  fmt::format("LB-BDD still {} after {} views", report.lb_bdd, out.steps.size()));
    }
    const Pose query{report.ball_center, Vec3(0.0, 0.0, mean_range)};
    const Neighbor nn = index.nearest(query, 1).front();
    if (!(nn.distance < config.bdd_cap)) {
      throw Error(ErrorCode::TargetUnreachable,
                  fmt::format("nearest source is at BDD {} (cap {})", nn.distance, config.bdd_cap));
    }
    const auto source = dataset.view(nn.position);
    const Pose pose{report.ball_center, Vec3(0.0, 0.0, source->pose.range())};
    const SynthesisResult result =
        synthesize(config.method, *source, pose, mesh, config.options, &renderer);

    NewView nv;
    nv.id = fresh_id();
    nv.view.image = result.image;
    nv.view.pose = pose;
    nv.view.intrinsics = source->intrinsics;
    nv.view.mask = result.transformed_mask;
    nv.provenance = synthesis_provenance(nn.id, config.method, nn.distance);
    out.manifest = append_views(out.manifest, {nv}, output_dir);
    out.steps.push_back({nv.id, nn.id, nn.distance, report.lb_bdd});
    spdlog::debug("densify: {} from {} at BDD {:.4f}, LB-BDD was {:.4f}", nv.id, nn.id,
                  nn.distance, report.lb_bdd);

    tracker.add(pose.rotation);
    report = tracker.report();
  }
  out.final = report;
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

std::vector<TrajectoryFrame> synthesize_trajectory(const Dataset& dataset,
                                                   const std::vector<TrajectorySample>& samples,
                                                   const TrajectoryConfig& config,
                                                   const TriangleMesh* mesh,
                                                   const FrameSink& sink) {
  const PoseIndex index = dataset.index(DistanceKind::bdd());
  const DatasetManifest& m = dataset.manifest();
  std::optional<SyntheticScene> scene;
  if (config.evaluate && m.synthetic) scene.emplace(*m.synthetic);
  std::optional<KeypointSet> kps = m.keypoints;
  if (!kps && scene) kps = scene->keypoints();

  DepthRenderer renderer;
  std::vector<TrajectoryFrame> frames;
  frames.reserve(samples.size());
  for (const TrajectorySample& s : samples) {
    const Neighbor nn = index.nearest(s.pose, 1).front();
    if (!(nn.distance < config.bdd_cap)) {
      throw Error(ErrorCode::NoValidSource,
                  fmt::format("no view below BDD {} for the pose at t={}", config.bdd_cap, s.time));
    }
    TrajectoryFrame frame;
    frame.time = s.time;
    frame.pose = s.pose;
    frame.source_id = nn.id;
    frame.bdd = nn.distance;

    const auto t0 = Clock::now();
    const auto source = dataset.view(nn.position);
    frame.load_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    View src = *source;
    bool with_keypoints = false;
    if (scene && kps) {
      try {
        src.keypoints_2d = kps->project(src.pose, src.intrinsics);
        with_keypoints = true;
      } catch (const Error&) {
        src.keypoints_2d.reset();
      }
    }
    SynthesisResult result;
    try {
      result = synthesize(config.method, src, s.pose, mesh, config.options, &renderer);
    } catch (const Error& e) {
      if (!with_keypoints || e.code() != ErrorCode::KeypointOutOfView) throw;
      src.keypoints_2d.reset();
      with_keypoints = false;
      result = synthesize(config.method, src, s.pose, mesh, config.options, &renderer);
    }
    frame.timing = result.timing;
    if (scene) {
      const View truth = scene->render(s.pose, src.intrinsics);
      if (with_keypoints && truth.mask->count() > 0) {
        try {
          frame.quality = score_synthesis(result, src, truth, *truth.mask, *kps, config.spec_weight);
        } catch (const Error& e) {
          spdlog::debug("frame at t={} not scored: {}", s.time, e.what());
        }
      }
    }
    if (sink) sink(frame, result);
    frames.push_back(std::move(frame));
  }
  return frames;
}

TimingStats timing_stats(std::vector<double> seconds) {
  TimingStats s;
  if (seconds.empty()) return s;
  std::sort(seconds.begin(), seconds.end());
  s.mean = std::accumulate(seconds.begin(), seconds.end(), 0.0) / double(seconds.size());
  // nearest-rank percentile
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * double(seconds.size())));
  s.p95 = seconds[std::max<std::size_t>(rank, 1) - 1];
  s.min = seconds.front();
  s.max = seconds.back();
  return s;
}

BenchResult bench(const Dataset& dataset, const BenchConfig& config, const TriangleMesh* mesh) {
  if (config.n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  if (dataset.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot bench an empty dataset");
  std::vector<double> ranges;
  for (const ViewRecord& r : dataset.manifest().views) ranges.push_back(r.pose.range());
  std::nth_element(ranges.begin(), ranges.begin() + ranges.size() / 2, ranges.end());
  const double range = ranges[ranges.size() / 2];

  const std::size_t n_waypoints = std::max<std::size_t>(4, config.n_samples / 25);
  const Trajectory traj = random_trajectory(n_waypoints, 0.9 * range, 1.1 * range, 0.4, config.seed);

  TrajectoryConfig tc;
  tc.method = config.method;
  tc.options.mask_with_mesh = config.mask_input;
  tc.options.interpolate = config.interpolate;
  tc.bdd_cap = std::numeric_limits<double>::infinity();
  tc.evaluate = false;

  BenchResult out;
  out.frames = synthesize_trajectory(dataset, traj.sample(config.n_samples), tc, mesh);
  out.n_samples = out.frames.size();
  std::vector<double> total, render, warp, interp, load;
  for (const TrajectoryFrame& f : out.frames) {
    total.push_back(f.timing.total);
    render.push_back(f.timing.render);
    warp.push_back(f.timing.warp);
    interp.push_back(f.timing.interpolate);
    load.push_back(f.load_seconds);
  }
  out.total = timing_stats(total);
  out.render = timing_stats(render);
  out.warp = timing_stats(warp);
  out.interpolate = timing_stats(interp);
  out.load = timing_stats(load);
  return out;
}

namespace {

std::ofstream open_csv(const fs::path& path, const RunInfo& run) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << run.comment_line() << '\n';
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace

void write_mc_csv(const std::vector<McRow>& rows, const fs::path& path, const RunInfo& run) {
  auto out = open_csv(path, run);
  out << "# keypoints: geometric oracle (ground-truth keypoints carried through the synthesis)\n";
  out << "pair_id,source_id,target_id,bdd,cl2,rotmag,spec,ssim,iou,kps_l2,kps_vbn\n";
  for (const McRow& r : rows) {
    const QualityReport& q = r.quality;
    out << r.pair_id << ',' << r.source_id << ',' << r.target_id << ',' << format_double(q.bdd)
        << ',' << format_double(q.cl2) << ',' << format_double(q.rot_mag) << ','
        << format_double(q.spec) << ',' << format_double(q.ssim) << ',' << format_double(q.iou)
        << ',' << format_double(q.kps_l2) << ',' << format_double(q.kps_vbn) << '\n';
  }
  check_written(out, path);
}

void write_mc_timings_csv(const std::vector<McRow>& rows, const fs::path& path,
                          const RunInfo& run) {
  auto out = open_csv(path, run);
  out << "pair_id,render_s,warp_s,interpolate_s,total_s\n";
  for (const McRow& r : rows) {
    out << r.pair_id << ',' << format_double(r.timing.render) << ','
        << format_double(r.timing.warp) << ',' << format_double(r.timing.interpolate) << ','
        << format_double(r.timing.total) << '\n';
  }
  check_written(out, path);
}

void write_threshold_csv(const std::vector<ThresholdEntry>& entries, const fs::path& path,
                         const RunInfo& run) {
  auto out = open_csv(path, run);
  out << "# keypoints: geometric oracle (ground-truth keypoints carried through the synthesis)\n";
  out << "metric,requirement,method,confidence,max_bdd\n";
  for (const ThresholdEntry& e : entries) {
    out << metric_name(e.requirement.metric) << ',' << format_double(e.requirement.value) << ','
        << method_name(e.method) << ',' << format_double(e.confidence) << ','
        << format_double(e.max_bdd) << '\n';
  }
  check_written(out, path);
}

void write_correlation_csv(const CorrelationTable& table, const fs::path& path,
                           const RunInfo& run) {
  static constexpr const char* kDistanceNames[4] = {"bdd", "cl2", "rotmag", "spec"};
  auto out = open_csv(path, run);
  out << "distance,kps_l2,kps_vbn,iou,ssim\n";
  for (int d = 0; d < 4; ++d) {
    out << kDistanceNames[d];
    for (int m = 0; m < 4; ++m) out << ',' << format_double(table.r[d][m]);
    out << '\n';
  }
  check_written(out, path);
}

}  // namespace visyreve
