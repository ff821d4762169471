#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "visyreve/geometry.hpp"
#include "visyreve/posemetrics.hpp"

namespace visyreve {

struct IndexEntry {
  std::string id;
  Pose pose;
};

struct Neighbor {
  std::string id;
  std::size_t position = 0;  // index into the entries the PoseIndex was built from
  double distance = 0.0;
  double cl2 = 0.0;  // C-L2 to the query, used for tie-breaking
};

enum class SearchStrategy {
  /// Vantage-point tree for true metrics, linear scan for BDD.
  Auto,
  VantagePoint,
  LinearScan,
};

struct QueryStats {
  std::size_t distance_evaluations = 0;
};

/// Immutable nearest-neighbor index over poses under one DistanceKind.
///
/// Results are identical to an exhaustive scan ordered by (distance, C-L2 to
/// the query, id). BDD violates the triangle inequality, so the Auto strategy
/// scans linearly for it; an explicit VantagePoint strategy with a positive
/// pruning slack trades exactness for speed.
class PoseIndex {
 public:
  /// Throws EmptyDataset when `entries` is empty.
  static PoseIndex build(std::vector<IndexEntry> entries, DistanceKind metric,
                         SearchStrategy strategy = SearchStrategy::Auto,
                         double pruning_slack = 0.0);

  /// The k nearest entries, ascending. Throws KTooLarge unless 1 <= k <= size().
  std::vector<Neighbor> nearest(const Pose& query, std::size_t k,
                                QueryStats* stats = nullptr) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  const DistanceKind& metric() const { return metric_; }
  SearchStrategy strategy() const { return strategy_; }

 private:
  struct Node {
    std::size_t entry = 0;
    double radius = 0.0;
    int inside = -1;
    int outside = -1;
  };

  PoseIndex(std::vector<IndexEntry> entries, DistanceKind metric)
      : entries_(std::move(entries)), metric_(metric) {}

  int build_node(std::vector<std::size_t>& items, std::size_t begin, std::size_t end);

  std::vector<IndexEntry> entries_;
  DistanceKind metric_;
  SearchStrategy strategy_ = SearchStrategy::LinearScan;
  double slack_ = 0.0;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace visyreve
