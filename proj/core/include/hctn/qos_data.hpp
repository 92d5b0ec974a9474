#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hctn/rng.hpp"

namespace hctn {

/// One observed invocation. Zero/negative QoS values are invalid entries
/// and are never stored as records.
struct QoSRecord {
  std::uint32_t user = 0;
  std::uint32_t service = 0;
  std::uint32_t time = 0;
  double value = 0.0;
};

/// One time step of the tensor: records sorted by (user, service) with a
/// CSR-style user index and a CSC-style position index by service.
class TimeSlice {
 public:
  TimeSlice() = default;
  TimeSlice(std::size_t users, std::size_t services, std::vector<QoSRecord> sorted_records);

  std::size_t count() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::span<const QoSRecord> all() const { return records_; }
  std::span<const QoSRecord> user_row(std::size_t u) const;
  /// Record positions of one service column, ordered by user.
  std::span<const std::uint32_t> service_positions(std::size_t s) const;
  const QoSRecord& record(std::size_t pos) const { return records_[pos]; }

 private:
  std::vector<QoSRecord> records_;
  std::vector<std::size_t> user_begin_;
  std::vector<std::uint32_t> by_service_;
  std::vector<std::size_t> service_begin_;
};

/// The sparse QoS invocation tensor: at most one record per
/// (user, service, time); density is |records| / (n*m*T).
class SparseQoSTensor {
 public:
  SparseQoSTensor() = default;
  SparseQoSTensor(std::size_t users, std::size_t services, std::size_t time_steps);

  /// Builds the per-time indexes. Duplicate (u,s,t) keeps the record that
  /// appeared last in `records` order; out-of-range indices throw DataError.
  static SparseQoSTensor from_records(std::size_t users, std::size_t services,
                                      std::size_t time_steps, std::vector<QoSRecord> records);

  std::size_t users() const { return n_; }
  std::size_t services() const { return m_; }
  std::size_t time_steps() const { return t_; }
  std::size_t record_count() const { return count_; }
  double density() const;

  const TimeSlice& slice(std::size_t t) const;
  std::vector<QoSRecord> all_records() const;

 private:
  std::size_t n_ = 0, m_ = 0, t_ = 0, count_ = 0;
  std::vector<TimeSlice> slices_;
};

struct LoadReport {
  SparseQoSTensor tensor;
  std::size_t parsed_lines = 0;
  std::size_t rejected_nonpositive = 0;
  std::size_t duplicates_dropped = 0;
  double min_value = 0.0;
  double max_value = 0.0;
};

/// Reads whitespace-separated "user service time value" lines. Malformed
/// lines and out-of-range indices throw (ParseError/DataError with the line
/// number); non-positive values are counted and skipped.
LoadReport load_wsdream(const std::string& path, std::size_t users, std::size_t services,
                        std::size_t time_steps);

enum class ColdStartMode { CU, CS, CB };

struct ColdStartSpec {
  ColdStartMode mode = ColdStartMode::CU;
  double xi_percent = 0.0;
};

struct SplitSpec {
  double train_fraction = 0.1;       // psi
  double validation_fraction = 0.2;  // share of the sampled train records
  std::size_t target_time = 0;       // tau_end
  std::size_t window = 1;            // tau history steps
  std::uint64_t seed = 42;
  std::optional<ColdStartSpec> cold_start;
};

struct SplitResult {
  SparseQoSTensor train;  // window history plus the sampled tau_end records
  std::vector<QoSRecord> validation;
  std::vector<QoSRecord> test;
  std::size_t target_time = 0;
  std::size_t window = 0;
};

/// Partitions the records at target_time into train/validation/test and
/// keeps the window history dense in the train tensor. Degenerate fractions
/// (no train records, or no test records) throw ConfigError.
SplitResult make_split(const SparseQoSTensor& tensor, const SplitSpec& spec);

struct ColdStartResult {
  SparseQoSTensor tensor;
  std::vector<std::uint32_t> removed_users;
  std::vector<std::uint32_t> removed_services;
};

/// Deletes every record of ceil(xi% * n) seeded-random users (CU), services
/// (CS), or both (CB) from the given tensor.
ColdStartResult simulate_cold_start(const SparseQoSTensor& tensor, ColdStartMode mode,
                                    double xi_percent, std::uint64_t seed);

}  // namespace hctn
