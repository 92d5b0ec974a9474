#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hctn/tensor.hpp"

namespace hctn {

/// Binary container for named tensors.
///
/// Layout: magic "HCTN", u32 version, u32 entry count, then per entry a
/// u32 name length + bytes and u32 rank + u64 dims; data blobs follow in
/// table order as row-major little-endian 64-bit floats.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::pair<std::string, Tensor>> entries;

  void put(const std::string& name, Tensor t);
  const Tensor* find(const std::string& name) const;
  /// Missing name throws DataError.
  const Tensor& require(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace hctn
