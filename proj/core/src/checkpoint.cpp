#include "hctn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hctn/errors.hpp"

namespace hctn {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'T', 'N'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace

void Checkpoint::put(const std::string& name, Tensor t) {
  entries.emplace_back(name, std::move(t));
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor& Checkpoint::require(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw DataError("checkpoint: missing entry '" + name + "'");
  return *t;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.shape()) write_pod<std::uint64_t>(os, d);
  }
  for (const auto& [name, t] : entries) {
    os.write(reinterpret_cast<const char*>(t.raw()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw DataError("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in '" + path + "'");
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = read_pod<std::uint32_t>(is);
  Checkpoint ck;
  std::vector<std::vector<std::size_t>> shapes;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rank = read_pod<std::uint32_t>(is);
    if (rank == 0 || rank > 3) throw DataError("checkpoint: bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
    ck.entries.emplace_back(std::move(name), Tensor{});
    shapes.push_back(std::move(shape));
  }
  for (std::uint32_t e = 0; e < count; ++e) {
    Tensor t(shapes[e]);
    is.read(reinterpret_cast<char*>(t.raw()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw DataError("checkpoint: truncated data section");
    ck.entries[e].second = std::move(t);
  }
  return ck;
}

}  // namespace hctn
