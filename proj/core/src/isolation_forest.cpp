#include "hctn/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hctn/errors.hpp"
#include "hctn/parallel.hpp"
#include "hctn/rng.hpp"

namespace hctn {

double iforest_path_normalizer(std::size_t n) {
  if (n <= 1) return 0.0;
  double harmonic = 0.0;
  for (std::size_t k = 1; k + 1 <= n; ++k) harmonic += 1.0 / static_cast<double>(k);
  return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

IsolationForest IsolationForest::fit(const std::vector<std::vector<double>>& points,
                                     const IsolationForestOptions& opts) {
  if (points.size() < 2) throw DataError("isolation forest: need at least 2 points");
  if (opts.n_trees < 1) throw ConfigError("isolation forest: need at least 1 tree");
  IsolationForest forest;
  forest.dims_ = points[0].size();
  for (const auto& p : points) {
    if (p.size() != forest.dims_) throw DataError("isolation forest: ragged feature vectors");
  }
  const std::size_t sample_size = std::min(opts.subsample, points.size());
  forest.normalizer_ = iforest_path_normalizer(sample_size);
  const auto depth_limit = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(sample_size, 2)))));

  forest.trees_.resize(opts.n_trees);
  parallel_for(opts.n_trees, [&](std::size_t ti) {
    Rng rng(derive_seed(opts.seed, ti));
    std::vector<std::size_t> sample = sample_without_replacement(points.size(), sample_size, rng);
    Tree& tree = forest.trees_[ti];

    // Iterative construction; each frame splits one index range.
    struct Frame {
      std::size_t node, begin, end, depth;
    };
    tree.nodes.push_back({});
    std::vector<Frame> work{{0, 0, sample.size(), 0}};
    while (!work.empty()) {
      Frame f = work.back();
      work.pop_back();
      TreeNode& node = tree.nodes[f.node];
      const std::size_t count = f.end - f.begin;
      node.size = count;
      if (count <= 1 || f.depth >= depth_limit) continue;

      // pick a feature whose values still spread; give up after d draws
      std::size_t feature = SIZE_MAX;
      double lo = 0.0, hi = 0.0;
      for (std::size_t attempt = 0; attempt < forest.dims_; ++attempt) {
        const std::size_t cand =
            static_cast<std::size_t>(uniform_index(rng, forest.dims_));
        lo = hi = points[sample[f.begin]][cand];
        for (std::size_t k = f.begin + 1; k < f.end; ++k) {
          lo = std::min(lo, points[sample[k]][cand]);
          hi = std::max(hi, points[sample[k]][cand]);
        }
        if (hi > lo) {
          feature = cand;
          break;
        }
      }
      if (feature == SIZE_MAX) continue;  // identical points: leaf

      const double threshold = uniform_real(rng, lo, hi);
      auto mid = std::partition(sample.begin() + f.begin, sample.begin() + f.end,
                                [&](std::size_t idx) { return points[idx][feature] < threshold; });
      const auto split = static_cast<std::size_t>(mid - sample.begin());
      if (split == f.begin || split == f.end) continue;  // degenerate cut

      node.feature = feature;
      node.threshold = threshold;
      node.left = tree.nodes.size();
      node.right = tree.nodes.size() + 1;
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      work.push_back({tree.nodes[f.node].left, f.begin, split, f.depth + 1});
      work.push_back({tree.nodes[f.node].right, split, f.end, f.depth + 1});
    }
  });
  return forest;
}

double IsolationForest::path_length(const Tree& tree, std::span<const double> point) const {
  std::size_t node = 0;
  std::size_t depth = 0;
  while (tree.nodes[node].feature != SIZE_MAX) {
    node = point[tree.nodes[node].feature] < tree.nodes[node].threshold ? tree.nodes[node].left
                                                                        : tree.nodes[node].right;
    ++depth;
  }
  return static_cast<double>(depth) + iforest_path_normalizer(tree.nodes[node].size);
}

double IsolationForest::score(std::span<const double> point) const {
  if (point.size() != dims_) throw DataError("isolation forest: wrong point dimension");
  double total = 0.0;
  for (const Tree& t : trees_) total += path_length(t, point);
  const double expected = total / static_cast<double>(trees_.size());
  return std::pow(2.0, -expected / normalizer_);
}

std::vector<double> score_records(const std::vector<QoSRecord>& records,
                                  const IsolationForestOptions& opts) {
  std::map<std::uint32_t, std::vector<std::size_t>> by_step;
  for (std::size_t i = 0; i < records.size(); ++i) by_step[records[i].time].push_back(i);

  std::vector<double> scores(records.size(), 0.5);
  for (const auto& [t, idx] : by_step) {
    if (idx.size() < 2) continue;
    std::vector<std::vector<double>> points;
    points.reserve(idx.size());
    for (std::size_t i : idx) points.push_back({records[i].value});
    IsolationForestOptions step_opts = opts;
    step_opts.seed = derive_seed(opts.seed, t);
    IsolationForest forest = IsolationForest::fit(points, step_opts);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      scores[idx[k]] = forest.score(points[k]);
    }
  }
  return scores;
}

OutlierReport remove_outliers(const std::vector<QoSRecord>& records, double lambda_percent,
                              const IsolationForestOptions& opts) {
  if (lambda_percent < 0.0 || lambda_percent > 50.0) {
    throw ConfigError("outlier removal percentage must be in [0, 50]");
  }
  OutlierReport report;
  report.scores = score_records(records, opts);
  report.removed_flag.assign(records.size(), false);
  const auto k = static_cast<std::size_t>(
      std::floor(lambda_percent / 100.0 * static_cast<double>(records.size())));

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (report.scores[a] != report.scores[b]) return report.scores[a] > report.scores[b];
    const auto& ra = records[a];
    const auto& rb = records[b];
    if (ra.time != rb.time) return ra.time < rb.time;
    if (ra.user != rb.user) return ra.user < rb.user;
    return ra.service < rb.service;
  });
  for (std::size_t i = 0; i < k; ++i) report.removed_flag[order[i]] = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (report.removed_flag[i] ? report.removed : report.kept).push_back(records[i]);
  }
  return report;
}

}  // namespace hctn
