#include "hctn/qos_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "hctn/errors.hpp"

namespace hctn {

TimeSlice::TimeSlice(std::size_t users, std::size_t services, std::vector<QoSRecord> sorted_records)
    : records_(std::move(sorted_records)) {
  user_begin_.assign(users + 1, 0);
  for (const auto& r : records_) ++user_begin_[r.user + 1];
  for (std::size_t u = 0; u < users; ++u) user_begin_[u + 1] += user_begin_[u];

  by_service_.resize(records_.size());
  std::iota(by_service_.begin(), by_service_.end(), 0u);
  std::sort(by_service_.begin(), by_service_.end(), [this](std::uint32_t a, std::uint32_t b) {
    const auto& ra = records_[a];
    const auto& rb = records_[b];
    return ra.service != rb.service ? ra.service < rb.service : ra.user < rb.user;
  });
  service_begin_.assign(services + 1, 0);
  for (const auto& r : records_) ++service_begin_[r.service + 1];
  for (std::size_t s = 0; s < services; ++s) service_begin_[s + 1] += service_begin_[s];
}

std::span<const QoSRecord> TimeSlice::user_row(std::size_t u) const {
  return {records_.data() + user_begin_[u], user_begin_[u + 1] - user_begin_[u]};
}

std::span<const std::uint32_t> TimeSlice::service_positions(std::size_t s) const {
  return {by_service_.data() + service_begin_[s], service_begin_[s + 1] - service_begin_[s]};
}

SparseQoSTensor::SparseQoSTensor(std::size_t users, std::size_t services, std::size_t time_steps)
    : n_(users), m_(services), t_(time_steps) {
  slices_.reserve(time_steps);
  for (std::size_t t = 0; t < time_steps; ++t) slices_.emplace_back(users, services, std::vector<QoSRecord>{});
}

SparseQoSTensor SparseQoSTensor::from_records(std::size_t users, std::size_t services,
                                              std::size_t time_steps,
                                              std::vector<QoSRecord> records) {
  for (const auto& r : records) {
    if (r.user >= users || r.service >= services || r.time >= time_steps) {
      throw DataError("record index out of range: (" + std::to_string(r.user) + "," +
                      std::to_string(r.service) + "," + std::to_string(r.time) + ")");
    }
  }
  // Keep the last occurrence of each (u,s,t); stable_sort preserves input
  // order within a key so the final element of a run is the last seen.
  std::stable_sort(records.begin(), records.end(), [](const QoSRecord& a, const QoSRecord& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.user != b.user) return a.user < b.user;
    return a.service < b.service;
  });
  std::vector<QoSRecord> unique;
  unique.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i + 1 < records.size() && records[i].time == records[i + 1].time &&
        records[i].user == records[i + 1].user && records[i].service == records[i + 1].service) {
      continue;
    }
    unique.push_back(records[i]);
  }

  SparseQoSTensor t(users, services, time_steps);
  std::size_t begin = 0;
  for (std::size_t step = 0; step < time_steps; ++step) {
    std::size_t end = begin;
    while (end < unique.size() && unique[end].time == step) ++end;
    t.slices_[step] = TimeSlice(
        users, services, std::vector<QoSRecord>(unique.begin() + begin, unique.begin() + end));
    begin = end;
  }
  t.count_ = unique.size();
  return t;
}

double SparseQoSTensor::density() const {
  const double cells = static_cast<double>(n_) * static_cast<double>(m_) * static_cast<double>(t_);
  return cells == 0.0 ? 0.0 : static_cast<double>(count_) / cells;
}

const TimeSlice& SparseQoSTensor::slice(std::size_t t) const {
  if (t >= t_) throw DataError("time step " + std::to_string(t) + " out of range");
  return slices_[t];
}

std::vector<QoSRecord> SparseQoSTensor::all_records() const {
  std::vector<QoSRecord> out;
  out.reserve(count_);
  for (const auto& s : slices_) {
    out.insert(out.end(), s.all().begin(), s.all().end());
  }
  return out;
}

namespace {

const char* skip_ws(const char* p, const char* end) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p;
}

}  // namespace

LoadReport load_wsdream(const std::string& path, std::size_t users, std::size_t services,
                        std::size_t time_steps) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open data file '" + path + "'");

  LoadReport report;
  std::vector<QoSRecord> records;
  std::string line;
  std::size_t line_no = 0;
  double min_v = std::numeric_limits<double>::infinity();
  double max_v = -std::numeric_limits<double>::infinity();

  while (std::getline(is, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    p = skip_ws(p, end);
    if (p == end) continue;  // blank line

    auto parse_u32 = [&](std::uint64_t& out) {
      auto [next, ec] = std::from_chars(p, end, out);
      if (ec != std::errc()) throw ParseError("expected integer field", line_no);
      p = skip_ws(next, end);
    };
    std::uint64_t u, s, t;
    parse_u32(u);
    parse_u32(s);
    parse_u32(t);
    double value;
    {
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc()) throw ParseError("expected numeric QoS value", line_no);
      p = skip_ws(next, end);
    }
    if (p != end) throw ParseError("trailing characters after value", line_no);
    if (!std::isfinite(value)) throw ParseError("non-finite QoS value", line_no);
    if (u >= users || s >= services || t >= time_steps) {
      throw DataError("index out of declared bounds at line " + std::to_string(line_no));
    }
    ++report.parsed_lines;
    if (value <= 0.0) {
      ++report.rejected_nonpositive;
      continue;
    }
    min_v = std::min(min_v, value);
    max_v = std::max(max_v, value);
    records.push_back(QoSRecord{static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(s),
                                static_cast<std::uint32_t>(t), value});
  }

  const std::size_t accepted = records.size();
  report.tensor = SparseQoSTensor::from_records(users, services, time_steps, std::move(records));
  report.duplicates_dropped = accepted - report.tensor.record_count();
  report.min_value = accepted ? min_v : 0.0;
  report.max_value = accepted ? max_v : 0.0;
  return report;
}

SplitResult make_split(const SparseQoSTensor& tensor, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction > 1.0) {
    throw ConfigError("train fraction must be in (0,1]");
  }
  if (spec.validation_fraction < 0.0 || spec.validation_fraction >= 1.0) {
    throw ConfigError("validation fraction must be in [0,1)");
  }
  if (spec.window < 1) throw ConfigError("window must be >= 1");
  if (spec.target_time < spec.window || spec.target_time >= tensor.time_steps()) {
    throw ConfigError("target time " + std::to_string(spec.target_time) +
                      " incompatible with window " + std::to_string(spec.window));
  }
  const TimeSlice& target = tensor.slice(spec.target_time);
  if (target.empty()) throw DataError("no records at target time step");

  const std::size_t count = target.count();
  const auto observed =
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(count)));
  const auto n_val =
      static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(observed)));
  const std::size_t n_train = observed - n_val;
  if (n_train == 0) throw ConfigError("train fraction leaves zero train records");
  if (observed >= count) throw ConfigError("train fraction leaves zero test records");

  Rng rng(spec.seed);
  std::vector<std::size_t> order = sample_without_replacement(count, count, rng);

  std::vector<QoSRecord> train_records;
  SplitResult out;
  out.target_time = spec.target_time;
  out.window = spec.window;
  for (std::size_t i = 0; i < count; ++i) {
    const QoSRecord& r = target.record(order[i]);
    if (i < n_train) {
      train_records.push_back(r);
    } else if (i < observed) {
      out.validation.push_back(r);
    } else {
      out.test.push_back(r);
    }
  }
  const std::size_t history_begin = spec.target_time - spec.window;
  for (std::size_t t = history_begin; t < spec.target_time; ++t) {
    auto recs = tensor.slice(t).all();
    train_records.insert(train_records.end(), recs.begin(), recs.end());
  }
  out.train = SparseQoSTensor::from_records(tensor.users(), tensor.services(),
                                            tensor.time_steps(), std::move(train_records));

  auto by_pair = [](const QoSRecord& a, const QoSRecord& b) {
    return a.user != b.user ? a.user < b.user : a.service < b.service;
  };
  std::sort(out.validation.begin(), out.validation.end(), by_pair);
  std::sort(out.test.begin(), out.test.end(), by_pair);

  if (spec.cold_start && spec.cold_start->xi_percent > 0.0) {
    out.train = simulate_cold_start(out.train, spec.cold_start->mode, spec.cold_start->xi_percent,
                                    derive_seed(spec.seed, 0xC01D))
                    .tensor;
  }
  return out;
}

ColdStartResult simulate_cold_start(const SparseQoSTensor& tensor, ColdStartMode mode,
                                    double xi_percent, std::uint64_t seed) {
  if (xi_percent < 0.0 || xi_percent > 50.0) {
    throw ConfigError("cold-start percentage must be in [0, 50]");
  }
  ColdStartResult out;
  const bool drop_users = mode == ColdStartMode::CU || mode == ColdStartMode::CB;
  const bool drop_services = mode == ColdStartMode::CS || mode == ColdStartMode::CB;

  Rng user_rng(derive_seed(seed, 1));
  Rng service_rng(derive_seed(seed, 2));
  std::vector<bool> user_removed(tensor.users(), false);
  std::vector<bool> service_removed(tensor.services(), false);
  if (drop_users) {
    const auto k = static_cast<std::size_t>(
        std::ceil(xi_percent / 100.0 * static_cast<double>(tensor.users())));
    for (std::size_t u : sample_without_replacement(tensor.users(), k, user_rng)) {
      user_removed[u] = true;
      out.removed_users.push_back(static_cast<std::uint32_t>(u));
    }
  }
  if (drop_services) {
    const auto k = static_cast<std::size_t>(
        std::ceil(xi_percent / 100.0 * static_cast<double>(tensor.services())));
    for (std::size_t s : sample_without_replacement(tensor.services(), k, service_rng)) {
      service_removed[s] = true;
      out.removed_services.push_back(static_cast<std::uint32_t>(s));
    }
  }
  std::sort(out.removed_users.begin(), out.removed_users.end());
  std::sort(out.removed_services.begin(), out.removed_services.end());

  std::vector<QoSRecord> kept;
  kept.reserve(tensor.record_count());
  for (const auto& r : tensor.all_records()) {
    if (user_removed[r.user] || service_removed[r.service]) continue;
    kept.push_back(r);
  }
  out.tensor = SparseQoSTensor::from_records(tensor.users(), tensor.services(),
                                             tensor.time_steps(), std::move(kept));
  return out;
}

}  // namespace hctn
