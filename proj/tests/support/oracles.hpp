// Straight-line reference implementations used by the unit and acceptance
// suites. These are kept independent of the library internals on purpose:
// they work on plain dense matrices with 0 meaning "not observed".
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

struct GdiResult {
  std::vector<double> users, services;
};

/// Greysheep discrepancy index, literally transcribed: per-entity plain
/// means, counterpart trimmed means (sum - max - min)/(count - 2) with the
/// plain-mean fallback for counts <= 2, population standard deviations, and
/// the inverted min-max normalization over active entities (1 when the
/// range collapses). Entities with empty profiles score 0.
inline GdiResult gdi_reference(const Mat& q) {
  const std::size_t n = q.size();
  const std::size_t m = n ? q[0].size() : 0;

  auto user_profile = [&](std::size_t i) {
    std::vector<double> xs;
    for (std::size_t j = 0; j < m; ++j) {
      if (q[i][j] != 0.0) xs.push_back(q[i][j]);
    }
    return xs;
  };
  auto service_profile = [&](std::size_t j) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
      if (q[i][j] != 0.0) xs.push_back(q[i][j]);
    }
    return xs;
  };
  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
  };
  auto sd_of = [&](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    const double mu = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(xs.size()));
  };
  auto trimmed = [&](const std::vector<double>& xs) {
    if (xs.size() <= 2) return mean_of(xs);
    double sum = 0.0, lo = xs[0], hi = xs[0];
    for (double x : xs) {
      sum += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return (sum - hi - lo) / static_cast<double>(xs.size() - 2);
  };

  std::vector<std::vector<double>> uprof(n), sprof(m);
  for (std::size_t i = 0; i < n; ++i) uprof[i] = user_profile(i);
  for (std::size_t j = 0; j < m; ++j) sprof[j] = service_profile(j);

  auto nhat = [&](const std::vector<std::vector<double>>& profiles) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : profiles) {
      if (p.empty()) continue;
      const double sd = sd_of(p);
      lo = std::min(lo, sd);
      hi = std::max(hi, sd);
    }
    std::vector<double> out(profiles.size(), 1.0);
    if (!(hi > lo)) return out;
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      if (profiles[k].empty()) continue;
      out[k] = 1.0 - (sd_of(profiles[k]) - lo) / (hi - lo);
    }
    return out;
  };
  const std::vector<double> nhat_u = nhat(uprof);
  const std::vector<double> nhat_s = nhat(sprof);

  GdiResult out;
  out.users.assign(n, 0.0);
  out.services.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (uprof[i].empty()) continue;
    const double mu_i = mean_of(uprof[i]);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (q[i][j] == 0.0) continue;
      acc += std::abs(q[i][j] - mu_i - trimmed(sprof[j])) * nhat_s[j];
      ++cnt;
    }
    out.users[i] = acc / static_cast<double>(cnt);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (sprof[j].empty()) continue;
    const double mu_j = mean_of(sprof[j]);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (q[i][j] == 0.0) continue;
      acc += std::abs(q[i][j] - mu_j - trimmed(uprof[i])) * nhat_u[i];
      ++cnt;
    }
    out.services[j] = acc / static_cast<double>(cnt);
  }
  return out;
}

// ---- plain dense helpers for the network oracles ----

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b[0].size();
  Mat out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t j = 0; j < m; ++j) out[i][j] += a[i][p] * b[p][j];
    }
  }
  return out;
}

inline Mat relu(Mat a) {
  for (auto& row : a) {
    for (double& v : row) v = v > 0.0 ? v : 0.0;
  }
  return a;
}

inline Mat add(const Mat& a, const Mat& b) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
  }
  return out;
}

inline Mat scaled(const Mat& a, double c) {
  Mat out = a;
  for (auto& row : out) {
    for (double& v : row) v *= c;
  }
  return out;
}

inline Mat add_row_bias(const Mat& a, const std::vector<double>& bias) {
  Mat out = a;
  for (auto& row : out) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
  return out;
}

inline Mat vstack(const Mat& top, const Mat& bottom) {
  Mat out = top;
  out.insert(out.end(), bottom.begin(), bottom.end());
  return out;
}

/// Two-source row-wise soft attention with a shared linear scoring map.
inline Mat soft_attention_fuse(const Mat& a, const Mat& b, const std::vector<double>& w,
                               double bias) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double sa = bias, sb = bias;
    for (std::size_t j = 0; j < w.size(); ++j) {
      sa += a[i][j] * w[j];
      sb += b[i][j] * w[j];
    }
    const double mx = std::max(sa, sb);
    const double ea = std::exp(sa - mx), eb = std::exp(sb - mx);
    const double alpha = ea / (ea + eb);
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      out[i][j] = alpha * a[i][j] + (1.0 - alpha) * b[i][j];
    }
  }
  return out;
}

/// Step-by-step scaled-dot attention for one head on steps x width input.
inline Mat attention_reference(const Mat& q, const Mat& k, const Mat& v, double d_k) {
  const std::size_t rows = q.size();
  Mat scores(rows, std::vector<double>(rows, 0.0));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < rows; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q[i].size(); ++c) dot += q[i][c] * k[j][c];
      scores[i][j] = dot / std::sqrt(d_k);
    }
  }
  for (auto& row : scores) {
    double mx = row[0];
    for (double v2 : row) mx = std::max(mx, v2);
    double z = 0.0;
    for (double& v2 : row) {
      v2 = std::exp(v2 - mx);
      z += v2;
    }
    for (double& v2 : row) v2 /= z;
  }
  return matmul(scores, v);
}

}  // namespace oracle
