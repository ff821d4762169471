#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/runinfo.hpp"

namespace visyreve {

/// Blue-noise reference sampling of SO(3) for density measurements.
struct BaselineSampling {
  std::vector<Quaternion> rotations;
  std::size_t candidates = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultBaselineSize = 2048;
inline constexpr std::size_t kDefaultBaselineCandidates = 32;

/// Greedy best-candidate sampling: the first rotation is uniform, each later
/// one is the best of `candidates` uniform draws, i.e. the one maximizing the
/// minimum BDD to the rotations accepted so far.
BaselineSampling sample_baseline(std::size_t size, std::size_t candidates, std::uint64_t seed);

/// Largest empty BDD-ball of a dataset against a baseline.
struct DensityReport {
  /// max over baseline of (min over dataset of BDD)
  double lb_bdd = 0.0;
  /// 1 / lb_bdd, +infinity when lb_bdd == 0
  double rho = std::numeric_limits<double>::infinity();
  Quaternion ball_center;
  std::size_t ball_center_index = 0;
  /// per-baseline-rotation minimum BDD to the dataset
  std::vector<double> min_distances;
};

DensityReport lb_bdd(std::span<const Quaternion> dataset, const BaselineSampling& baseline,
                     int threads = 1);
DensityReport lb_bdd(std::span<const Pose> dataset, const BaselineSampling& baseline,
                     int threads = 1);

/// Keeps the per-baseline minima of a growing dataset, so adding a pose costs
/// one pass over the baseline instead of a full recomputation.
class DensityTracker {
 public:
  DensityTracker(std::span<const Quaternion> dataset, const BaselineSampling& baseline,
                 int threads = 1);

  void add(const Quaternion& rotation);
  DensityReport report() const;

 private:
  const BaselineSampling* baseline_;
  std::vector<double> min_distances_;
};

/// Rejection-samples a rotation whose BDD to `center` lies within
/// [target - tolerance, target + tolerance]. Throws RejectionBudgetExhausted
/// after `max_draws` unsuccessful draws.
Quaternion sample_at_bdd(const Quaternion& center, double target_bdd, double tolerance,
                         std::uint64_t seed, std::size_t max_draws = 1'000'000);

/// density.json: summary + ball center; density.csv: one row per baseline rotation.
void write_density_json(const DensityReport& report, const BaselineSampling& baseline,
                        const std::filesystem::path& path, const RunInfo& run);
void write_density_csv(const DensityReport& report, const BaselineSampling& baseline,
                       const std::filesystem::path& path, const RunInfo& run);

}  // namespace visyreve
