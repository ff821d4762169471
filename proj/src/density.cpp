#include "visyreve/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/random.hpp"

namespace visyreve {

Quaternion uniform_rotation(Rng& rng) {
  using std::numbers::pi;
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return {b * std::cos(2.0 * pi * u3), a * std::sin(2.0 * pi * u2), a * std::cos(2.0 * pi * u2),
          b * std::sin(2.0 * pi * u3)};
}

BaselineSampling sample_baseline(std::size_t size, std::size_t candidates, std::uint64_t seed) {
  if (size < 1 || candidates < 1) {
    throw Error(ErrorCode::InvalidArgument, "baseline size and candidates must be >= 1");
  }
  Rng rng(seed);
  BaselineSampling out;
  out.candidates = candidates;
  out.seed = seed;
  out.rotations.reserve(size);
  out.rotations.push_back(uniform_rotation(rng));
  while (out.rotations.size() < size) {
    Quaternion best;
    double best_min = -1.0;
    for (std::size_t c = 0; c < candidates; ++c) {
      const Quaternion q = uniform_rotation(rng);
      double running = std::numeric_limits<double>::infinity();
      for (const Quaternion& accepted : out.rotations) {
        running = std::min(running, bdd_value(q, accepted));
        // cannot beat the current best any more
        if (running <= best_min) break;
      }
      if (running > best_min) {
        best_min = running;
        best = q;
      }
    }
    out.rotations.push_back(best);
  }
  return out;
}

namespace {

std::vector<double> min_distances(std::span<const Quaternion> dataset,
                                  const BaselineSampling& baseline, int threads) {
  const auto n = static_cast<long>(baseline.rotations.size());
  std::vector<double> mins(baseline.rotations.size());
#pragma omp parallel for num_threads(std::max(threads, 1)) schedule(static)
  for (long i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (const Quaternion& q : dataset) {
      m = std::min(m, bdd_value(baseline.rotations[i], q));
    }
    mins[i] = m;
  }
  return mins;
}

DensityReport make_report(std::vector<double> mins, const BaselineSampling& baseline) {
  DensityReport r;
  // first maximum wins, so the result does not depend on evaluation order
  const auto it = std::max_element(mins.begin(), mins.end());
  r.ball_center_index = static_cast<std::size_t>(it - mins.begin());
  r.lb_bdd = *it;
  r.rho = r.lb_bdd > 0.0 ? 1.0 / r.lb_bdd : std::numeric_limits<double>::infinity();
  r.ball_center = baseline.rotations[r.ball_center_index];
  r.min_distances = std::move(mins);
  return r;
}

void check_inputs(std::size_t dataset_size, const BaselineSampling& baseline) {
  if (dataset_size == 0 || baseline.rotations.empty()) {
    throw Error(ErrorCode::EmptyInput, "LB-BDD needs a nonempty dataset and baseline");
  }
}

}  // namespace

DensityReport lb_bdd(std::span<const Quaternion> dataset, const BaselineSampling& baseline,
                     int threads) {
  check_inputs(dataset.size(), baseline);
  return make_report(min_distances(dataset, baseline, threads), baseline);
}

DensityReport lb_bdd(std::span<const Pose> dataset, const BaselineSampling& baseline,
                     int threads) {
  std::vector<Quaternion> rotations;
  rotations.reserve(dataset.size());
  for (const Pose& p : dataset) rotations.push_back(p.rotation);
  return lb_bdd(std::span<const Quaternion>(rotations), baseline, threads);
}

DensityTracker::DensityTracker(std::span<const Quaternion> dataset,
                               const BaselineSampling& baseline, int threads)
    : baseline_(&baseline) {
  check_inputs(dataset.size(), baseline);
  min_distances_ = min_distances(dataset, baseline, threads);
}

void DensityTracker::add(const Quaternion& rotation) {
  for (std::size_t i = 0; i < min_distances_.size(); ++i) {
    min_distances_[i] = std::min(min_distances_[i], bdd_value(baseline_->rotations[i], rotation));
  }
}

DensityReport DensityTracker::report() const { return make_report(min_distances_, *baseline_); }

Quaternion sample_at_bdd(const Quaternion& center, double target_bdd, double tolerance,
                         std::uint64_t seed, std::size_t max_draws) {
  using std::numbers::pi;
  if (!(target_bdd >= 0.0 && target_bdd <= 1.0) || !(tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 <= target_bdd <= 1 and tolerance > 0");
  }
  Rng rng(seed);
  // Proposal: theta/pi and 2 phi/pi uniform, axis azimuth uniform, axis
  // hemisphere random. This spreads proposals evenly over BDD values; the
  // acceptance test uses the exact BDD of the candidate.
  for (std::size_t draw = 0; draw < max_draws; ++draw) {
    const double theta = pi * rng.uniform();
    const double phi = 0.5 * pi * rng.uniform();
    const double psi = 2.0 * pi * rng.uniform();
    const double zsign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const Vec3 axis(std::sin(phi) * std::cos(psi), std::sin(phi) * std::sin(psi),
                    zsign * std::cos(phi));
    const Quaternion candidate = Quaternion::from_axis_angle(axis, theta) * center;
    if (std::abs(bdd_value(candidate, center) - target_bdd) <= tolerance) {
      return candidate;
    }
  }
  throw Error(ErrorCode::RejectionBudgetExhausted,
              "no rotation within tolerance after " + std::to_string(max_draws) + " draws");
}

namespace {

nlohmann::json quaternion_json(const Quaternion& q) { return {q.w(), q.x(), q.y(), q.z()}; }

}  // namespace

void write_density_json(const DensityReport& report, const BaselineSampling& baseline,
                        const std::filesystem::path& path, const RunInfo& run) {
  nlohmann::json j;
  j["meta"] = run.to_json();
  j["lb_bdd"] = report.lb_bdd;
  // JSON has no infinity; a null rho means lb_bdd == 0
  j["rho"] = std::isinf(report.rho) ? nlohmann::json(nullptr) : nlohmann::json(report.rho);
  j["ball_center_wxyz"] = quaternion_json(report.ball_center);
  j["ball_center_index"] = report.ball_center_index;
  j["baseline"] = {{"size", baseline.rotations.size()},
                   {"candidates", baseline.candidates},
                   {"seed", baseline.seed}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_density_csv(const DensityReport& report, const BaselineSampling& baseline,
                       const std::filesystem::path& path, const RunInfo& run) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << run.comment_line() << '\n';
  out << "# lb_bdd=" << format_double(report.lb_bdd) << " rho=" << format_double(report.rho)
      << " ball_center_index=" << report.ball_center_index << '\n';
  out << "baseline_index,qw,qx,qy,qz,min_bdd\n";
  for (std::size_t i = 0; i < baseline.rotations.size(); ++i) {
    const Quaternion& q = baseline.rotations[i];
    out << i << ',' << format_double(q.w()) << ',' << format_double(q.x()) << ','
        << format_double(q.y()) << ',' << format_double(q.z()) << ','
        << format_double(report.min_distances[i]) << '\n';
  }
}

}  // namespace visyreve
