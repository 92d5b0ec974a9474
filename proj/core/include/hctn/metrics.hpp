#pragma once

#include <vector>

#include "hctn/qos_data.hpp"
#include "hctn/tensor.hpp"

namespace hctn {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// MAE and RMSE of the dense prediction matrix over the given record set.
Metrics evaluate(const Tensor& qhat, const std::vector<QoSRecord>& test_set);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Normal-approximation interval mean +/- z * sd / sqrt(k) over per-run
/// values (sample standard deviation). Supported levels: 90, 95, 99.
ConfidenceInterval confidence_interval(const std::vector<double>& runs, int level_percent);

}  // namespace hctn
