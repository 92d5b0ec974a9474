#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hctn/qos_data.hpp"

namespace hctn {

/// Synthetic low-rank QoS fixture: Q(i,j,t) = (u_i . v_j) * season(t) plus
/// multiplicative noise, sampled per step at the given density. Optional
/// greysheep users/services get scale-permuted latent profiles.
struct SynthSpec {
  std::size_t users = 20;
  std::size_t services = 15;
  std::size_t time_steps = 8;
  std::size_t rank = 2;
  double density = 0.3;
  double noise = 0.05;             // relative noise level
  double greysheep_fraction = 0.0;  // share of users with deviant profiles
  double greysheep_scale = 4.0;
  std::uint64_t seed = 42;
};

SparseQoSTensor generate_synthetic(const SynthSpec& spec);

/// Multiplies the values of a seeded fraction of records by `scale`;
/// indices of the corrupted records (in input order) are returned.
struct CorruptionResult {
  std::vector<QoSRecord> records;
  std::vector<std::size_t> corrupted;
};
CorruptionResult corrupt_records(const std::vector<QoSRecord>& records, double fraction,
                                 double scale, std::uint64_t seed);

/// Rebuilds a tensor with a subset of its records replaced (same dims).
SparseQoSTensor with_records(const SparseQoSTensor& like, std::vector<QoSRecord> records);

/// Writes records as WSDREAM text lines "user service time value".
void write_wsdream(const std::string& path, const SparseQoSTensor& tensor);

}  // namespace hctn
