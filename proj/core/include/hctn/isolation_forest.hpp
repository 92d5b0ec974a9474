#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hctn/qos_data.hpp"

namespace hctn {

/// Average unsuccessful-search path length c(n) = 2H(n-1) - 2(n-1)/n with
/// exact harmonic numbers; c(1) = 0, c(2) = 1.
double iforest_path_normalizer(std::size_t n);

struct IsolationForestOptions {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;  // capped at the dataset size
  std::uint64_t seed = 42;
};

/// Ensemble of random axis-aligned split trees; anomaly score
/// s(x) = 2^(-E[h(x)] / c(subsample)), higher is more anomalous.
class IsolationForest {
 public:
  static IsolationForest fit(const std::vector<std::vector<double>>& points,
                             const IsolationForestOptions& opts);

  double score(std::span<const double> point) const;

 private:
  struct TreeNode {
    // leaf when feature == SIZE_MAX; then `size` is the leaf population
    std::size_t feature = SIZE_MAX;
    double threshold = 0.0;
    std::size_t left = 0, right = 0, size = 0;
  };
  struct Tree {
    std::vector<TreeNode> nodes;
  };

  std::vector<Tree> trees_;
  std::size_t dims_ = 0;
  double normalizer_ = 1.0;

  double path_length(const Tree& tree, std::span<const double> point) const;
};

/// Scores every record by a per-time-step forest over its scalar QoS value.
/// Steps with fewer than two records get the neutral score 0.5.
std::vector<double> score_records(const std::vector<QoSRecord>& records,
                                  const IsolationForestOptions& opts);

struct OutlierReport {
  std::vector<QoSRecord> kept;
  std::vector<QoSRecord> removed;
  std::vector<double> scores;       // aligned with the input order
  std::vector<bool> removed_flag;   // aligned with the input order
};

/// Removes the top floor(lambda% * count) records by anomaly score.
/// lambda = 0 keeps the set untouched by construction.
OutlierReport remove_outliers(const std::vector<QoSRecord>& records, double lambda_percent,
                              const IsolationForestOptions& opts);

}  // namespace hctn
