#include "hctn/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hctn/errors.hpp"

namespace hctn {

namespace {

struct ProfileMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double sum = 0.0, min = 0.0, max = 0.0;
};

ProfileMoments moments(std::span<const double> xs) {
  ProfileMoments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  m.min = std::numeric_limits<double>::infinity();
  m.max = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    m.sum += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean = m.sum / static_cast<double>(m.count);
  double acc = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    acc += d * d;
  }
  m.stddev = std::sqrt(acc / static_cast<double>(m.count));
  return m;
}

/// (sum - max - min) / (count - 2); plain mean when count <= 2.
double trimmed_mean(const ProfileMoments& m) {
  if (m.count <= 2) return m.mean;
  return (m.sum - m.max - m.min) / static_cast<double>(m.count - 2);
}

/// 1 - (sd - min_sd) / (max_sd - min_sd); 1 when the range collapses.
std::vector<double> inverted_normalized_sd(const std::vector<ProfileMoments>& ms) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : ms) {
    if (m.count == 0) continue;
    lo = std::min(lo, m.stddev);
    hi = std::max(hi, m.stddev);
  }
  std::vector<double> out(ms.size(), 1.0);
  const double range = hi - lo;
  if (!(range > 0.0)) return out;  // uniform or no active entities
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i].count == 0) continue;
    out[i] = 1.0 - (ms[i].stddev - lo) / range;
  }
  return out;
}

}  // namespace

GdiColumns gdi(const SparseQoSTensor& tensor, std::size_t t) {
  const std::size_t n = tensor.users(), m = tensor.services();
  const TimeSlice& slice = tensor.slice(t);

  std::vector<ProfileMoments> user_m(n), service_m(m);
  std::vector<double> buf;
  for (std::size_t u = 0; u < n; ++u) {
    auto row = slice.user_row(u);
    buf.clear();
    for (const auto& r : row) buf.push_back(r.value);
    user_m[u] = moments(buf);
  }
  for (std::size_t s = 0; s < m; ++s) {
    buf.clear();
    for (std::uint32_t pos : slice.service_positions(s)) buf.push_back(slice.record(pos).value);
    service_m[s] = moments(buf);
  }

  const std::vector<double> nhat_user = inverted_normalized_sd(user_m);
  const std::vector<double> nhat_service = inverted_normalized_sd(service_m);

  GdiColumns out;
  out.users.assign(n, 0.0);
  out.services.assign(m, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto row = slice.user_row(u);
    if (row.empty()) continue;
    double acc = 0.0;
    for (const auto& r : row) {
      acc += std::abs(r.value - user_m[u].mean - trimmed_mean(service_m[r.service])) *
             nhat_service[r.service];
    }
    out.users[u] = acc / static_cast<double>(row.size());
  }
  for (std::size_t s = 0; s < m; ++s) {
    auto positions = slice.service_positions(s);
    if (positions.empty()) continue;
    double acc = 0.0;
    for (std::uint32_t pos : positions) {
      const QoSRecord& r = slice.record(pos);
      acc += std::abs(r.value - service_m[s].mean - trimmed_mean(user_m[r.user])) *
             nhat_user[r.user];
    }
    out.services[s] = acc / static_cast<double>(positions.size());
  }
  return out;
}

std::size_t GreysheepReport::labeled_users() const {
  std::size_t c = 0;
  for (const auto& col : indicator) {
    for (std::size_t i = 0; i < users; ++i) c += col.at(i, 0) != 0.0;
  }
  return c;
}

std::size_t GreysheepReport::labeled_services() const {
  std::size_t c = 0;
  for (const auto& col : indicator) {
    for (std::size_t i = users; i < users + services; ++i) c += col.at(i, 0) != 0.0;
  }
  return c;
}

namespace {

/// Mean/population-std over the entities active at the step.
std::pair<double, double> population_stats(const std::vector<double>& gdi_col,
                                           const std::vector<bool>& active) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gdi_col.size(); ++i) {
    if (!active[i]) continue;
    sum += gdi_col[i];
    ++count;
  }
  if (count == 0) return {0.0, 0.0};
  const double mean = sum / static_cast<double>(count);
  double acc = 0.0;
  for (std::size_t i = 0; i < gdi_col.size(); ++i) {
    if (!active[i]) continue;
    const double d = gdi_col[i] - mean;
    acc += d * d;
  }
  return {mean, std::sqrt(acc / static_cast<double>(count))};
}

}  // namespace

GreysheepReport detect_greysheep(const SparseQoSTensor& tensor, std::size_t target_time,
                                 std::size_t window, double c1, double c2) {
  if (window < 1 || target_time < window || target_time > tensor.time_steps()) {
    throw ConfigError("detect_greysheep: invalid window");
  }
  const std::size_t n = tensor.users(), m = tensor.services();
  GreysheepReport rep;
  rep.users = n;
  rep.services = m;
  rep.c1 = c1;
  rep.c2 = c2;
  rep.gdi_users = Tensor(n, window);
  rep.gdi_services = Tensor(m, window);
  rep.indicator.resize(window);

  for (std::size_t i = 0; i < window; ++i) {
    const std::size_t t = target_time - window + i;
    const TimeSlice& slice = tensor.slice(t);
    GdiColumns cols = gdi(tensor, t);
    for (std::size_t u = 0; u < n; ++u) rep.gdi_users.at(u, i) = cols.users[u];
    for (std::size_t s = 0; s < m; ++s) rep.gdi_services.at(s, i) = cols.services[s];

    std::vector<bool> user_active(n, false), service_active(m, false);
    for (const auto& r : slice.all()) {
      user_active[r.user] = true;
      service_active[r.service] = true;
    }
    auto [mu_u, sd_u] = population_stats(cols.users, user_active);
    auto [mu_s, sd_s] = population_stats(cols.services, service_active);
    rep.mu_user.push_back(mu_u);
    rep.sigma_user.push_back(sd_u);
    rep.mu_service.push_back(mu_s);
    rep.sigma_service.push_back(sd_s);

    Tensor g(n + m, 1);
    for (std::size_t u = 0; u < n; ++u) {
      if (cols.users[u] > mu_u + c1 * sd_u) g.at(u, 0) = 1.0;
    }
    for (std::size_t s = 0; s < m; ++s) {
      if (cols.services[s] > mu_s + c2 * sd_s) g.at(n + s, 0) = 1.0;
    }
    rep.indicator[i] = std::move(g);
  }
  return rep;
}

std::array<double, 14> local_stats(std::span<const double> profile) {
  std::array<double, 14> out{};
  const std::size_t n = profile.size();
  if (n == 0) return out;

  std::vector<double> sorted(profile.begin(), profile.end());
  std::sort(sorted.begin(), sorted.end());

  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  };

  const ProfileMoments m = moments(profile);
  const double median = quantile(0.5);

  double abs_dev = 0.0, energy = 0.0, m3 = 0.0, m4 = 0.0;
  std::vector<double> dev_from_median(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = profile[i];
    const double d = x - m.mean;
    abs_dev += std::abs(d);
    energy += x * x;
    m3 += d * d * d;
    m4 += d * d * d * d;
    dev_from_median[i] = std::abs(x - median);
  }
  abs_dev /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  std::sort(dev_from_median.begin(), dev_from_median.end());
  const double median_ad = [&] {
    const double pos = 0.5 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n) return dev_from_median[n - 1];
    return dev_from_median[lo] + frac * (dev_from_median[lo + 1] - dev_from_median[lo]);
  }();

  // Fisher skewness and excess kurtosis; 0 for degenerate distributions.
  const double skew = m.stddev > 0.0 ? m3 / (m.stddev * m.stddev * m.stddev) : 0.0;
  const double kurt = m.stddev > 0.0 ? m4 / (m.stddev * m.stddev * m.stddev * m.stddev) - 3.0 : 0.0;

  // Shannon entropy (nats) of a 10-bin histogram over the profile's range.
  double entropy = 0.0;
  if (m.max > m.min) {
    std::array<std::size_t, 10> bins{};
    const double width = (m.max - m.min) / 10.0;
    for (double x : profile) {
      auto b = static_cast<std::size_t>((x - m.min) / width);
      if (b > 9) b = 9;
      ++bins[b];
    }
    for (std::size_t b : bins) {
      if (b == 0) continue;
      const double p = static_cast<double>(b) / static_cast<double>(n);
      entropy -= p * std::log(p);
    }
  }

  out[0] = m.min;
  out[1] = m.max;
  out[2] = m.mean;
  out[3] = median;
  out[4] = m.stddev;
  out[5] = skew;
  out[6] = kurt;
  out[7] = quantile(0.75) - quantile(0.25);
  out[8] = abs_dev;
  out[9] = median_ad;
  out[10] = std::sqrt(energy / static_cast<double>(n));
  out[11] = energy;
  out[12] = entropy;
  out[13] = m.max - m.min;
  return out;
}

std::vector<Tensor> build_local_features(const SparseQoSTensor& tensor, std::size_t target_time,
                                         std::size_t window) {
  if (window < 1 || target_time < window || target_time > tensor.time_steps()) {
    throw ConfigError("build_local_features: invalid window");
  }
  const std::size_t n = tensor.users(), m = tensor.services();
  std::vector<Tensor> out(window);
  std::vector<double> buf;
  for (std::size_t i = 0; i < window; ++i) {
    const std::size_t t = target_time - window + i;
    const TimeSlice& slice = tensor.slice(t);
    Tensor feats(n + m, 14);
    for (std::size_t u = 0; u < n; ++u) {
      buf.clear();
      for (const auto& r : slice.user_row(u)) buf.push_back(r.value);
      const auto st = local_stats(buf);
      for (std::size_t k = 0; k < 14; ++k) feats.at(u, k) = st[k];
    }
    for (std::size_t s = 0; s < m; ++s) {
      buf.clear();
      for (std::uint32_t pos : slice.service_positions(s)) buf.push_back(slice.record(pos).value);
      const auto st = local_stats(buf);
      for (std::size_t k = 0; k < 14; ++k) feats.at(n + s, k) = st[k];
    }
    out[i] = std::move(feats);
  }
  return out;
}

NodePtr inject_rows(const NodePtr& indicator_col, const NodePtr& features) {
  return scale_rows(features, indicator_col);
}

Tensor complement_indicator(const Tensor& indicator_col) {
  Tensor out(indicator_col.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - indicator_col[i];
  return out;
}

}  // namespace hctn
