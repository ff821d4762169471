#include "visyreve/nnindex.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include <spdlog/spdlog.h>

#include "visyreve/error.hpp"

namespace visyreve {

namespace {

// Distances computed in floating point can violate the triangle inequality by
// a few ulps; pruning keeps this margin on top of the configured slack.
constexpr double kRoundingMargin = 1e-9;

struct Candidate {
  double distance;
  double cl2;
  const std::string* id;
  std::size_t position;
};

bool before(const Candidate& a, const Candidate& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.cl2 != b.cl2) return a.cl2 < b.cl2;
  if (*a.id != *b.id) return *a.id < *b.id;
  return a.position < b.position;
}

struct WorseFirst {
  bool operator()(const Candidate& a, const Candidate& b) const { return before(a, b); }
};

// Bounded max-heap of the k best candidates seen so far.
class KBest {
 public:
  explicit KBest(std::size_t k) : k_(k) {}

  void offer(const Candidate& c) {
    if (heap_.size() < k_) {
      heap_.push(c);
    } else if (before(c, heap_.top())) {
      heap_.pop();
      heap_.push(c);
    }
  }

  double radius() const {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.top().distance;
  }

  std::vector<Candidate> sorted() {
    std::vector<Candidate> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t k_;
  std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap_;
};

}  // namespace

PoseIndex PoseIndex::build(std::vector<IndexEntry> entries, DistanceKind metric,
                           SearchStrategy strategy, double pruning_slack) {
  if (entries.empty()) {
    throw Error(ErrorCode::EmptyDataset, "cannot build a PoseIndex without entries");
  }
  if (pruning_slack < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "pruning slack must be >= 0");
  }
  PoseIndex index(std::move(entries), metric);
  index.slack_ = pruning_slack;
  if (strategy == SearchStrategy::Auto) {
    strategy = metric.is_metric() ? SearchStrategy::VantagePoint : SearchStrategy::LinearScan;
    if (!metric.is_metric()) {
      spdlog::debug("PoseIndex: {} violates the triangle inequality, using linear scan",
                    metric.name());
    }
  }
  index.strategy_ = strategy;
  if (strategy == SearchStrategy::VantagePoint) {
    std::vector<std::size_t> items(index.entries_.size());
    std::iota(items.begin(), items.end(), std::size_t{0});
    index.nodes_.reserve(items.size());
    index.root_ = index.build_node(items, 0, items.size());
  }
  return index;
}

int PoseIndex::build_node(std::vector<std::size_t>& items, std::size_t begin, std::size_t end) {
  if (begin >= end) {
    return -1;
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({items[begin], 0.0, -1, -1});
  const Pose& vantage = entries_[items[begin]].pose;
  ++begin;
  if (begin == end) {
    return id;
  }
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    dist.emplace_back(distance(metric_, vantage, entries_[items[i]].pose), items[i]);
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  const double radius = dist[mid].first;
  // inside: d <= radius, outside: d > radius; partition keeps this exact
  auto split = std::partition(dist.begin(), dist.end(),
                              [radius](const auto& p) { return p.first <= radius; });
  const std::size_t n_inside = static_cast<std::size_t>(split - dist.begin());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    items[begin + i] = dist[i].second;
  }
  nodes_[id].radius = radius;
  const int inside = build_node(items, begin, begin + n_inside);
  const int outside = build_node(items, begin + n_inside, end);
  nodes_[id].inside = inside;
  nodes_[id].outside = outside;
  return id;
}

std::vector<Neighbor> PoseIndex::nearest(const Pose& query, std::size_t k,
                                         QueryStats* stats) const {
  if (k < 1 || k > entries_.size()) {
    throw Error(ErrorCode::KTooLarge, "k must satisfy 1 <= k <= " + std::to_string(size()));
  }
  KBest best(k);
  std::size_t evaluations = 0;
  auto visit = [&](std::size_t position) {
    const Pose& p = entries_[position].pose;
    const double d = distance(metric_, query, p);
    ++evaluations;
    best.offer({d, cl2(query, p), &entries_[position].id, position});
    return d;
  };

  if (strategy_ == SearchStrategy::LinearScan) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      visit(i);
    }
  } else {
    const double margin = slack_ + kRoundingMargin;
    // (node, lower bound on the distance of anything in its subtree)
    std::vector<std::pair<int, double>> stack{{root_, 0.0}};
    while (!stack.empty()) {
      const auto [n, bound] = stack.back();
      stack.pop_back();
      // ties at exactly the current radius must still be explored
      if (n < 0 || bound > best.radius() + margin) continue;
      const Node& node = nodes_[n];
      const double d = visit(node.entry);
      const double inside_bound = std::max(0.0, d - node.radius);
      const double outside_bound = std::max(0.0, node.radius - d);
      // push the farther side first so the nearer one is searched first
      if (d <= node.radius) {
        stack.emplace_back(node.outside, outside_bound);
        stack.emplace_back(node.inside, inside_bound);
      } else {
        stack.emplace_back(node.inside, inside_bound);
        stack.emplace_back(node.outside, outside_bound);
      }
    }
  }
  if (stats) {
    stats->distance_evaluations = evaluations;
  }

  std::vector<Neighbor> out;
  for (const Candidate& c : best.sorted()) {
    out.push_back({*c.id, c.position, c.distance, c.cl2});
  }
  return out;
}

}  // namespace visyreve
