#include "hctn/metrics.hpp"

#include <cmath>

#include "hctn/errors.hpp"

namespace hctn {

Metrics evaluate(const Tensor& qhat, const std::vector<QoSRecord>& test_set) {
  if (test_set.empty()) throw DataError("evaluate: empty test set");
  double abs_acc = 0.0, sq_acc = 0.0;
  for (const auto& r : test_set) {
    const double d = r.value - qhat.at(r.user, r.service);
    abs_acc += std::abs(d);
    sq_acc += d * d;
  }
  const double n = static_cast<double>(test_set.size());
  Metrics m{abs_acc / n, std::sqrt(sq_acc / n), test_set.size()};
  if (m.rmse < m.mae - 1e-12) {
    throw NumericError("evaluate: rmse < mae, residual accumulation is corrupt");
  }
  return m;
}

ConfidenceInterval confidence_interval(const std::vector<double>& runs, int level_percent) {
  if (runs.size() < 2) throw DataError("confidence_interval: need at least 2 runs");
  double z = 0.0;
  switch (level_percent) {
    case 90: z = 1.645; break;
    case 95: z = 1.960; break;
    case 99: z = 2.576; break;
    default: throw ConfigError("confidence level must be 90, 95 or 99");
  }
  const double k = static_cast<double>(runs.size());
  double mean = 0.0;
  for (double v : runs) mean += v;
  mean /= k;
  double acc = 0.0;
  for (double v : runs) acc += (v - mean) * (v - mean);
  const double sd = std::sqrt(acc / (k - 1.0));
  const double half = z * sd / std::sqrt(k);
  return ConfidenceInterval{mean - half, mean + half};
}

}  // namespace hctn
