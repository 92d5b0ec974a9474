#include "hctn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hctn/errors.hpp"
#include "hctn/rng.hpp"

namespace hctn {

SparseQoSTensor generate_synthetic(const SynthSpec& spec) {
  if (spec.density <= 0.0 || spec.density > 1.0) {
    throw ConfigError("synthetic density must be in (0,1]");
  }
  if (spec.greysheep_fraction < 0.0 || spec.greysheep_fraction > 0.5) {
    throw ConfigError("greysheep fraction must be in [0, 0.5]");
  }
  Rng rng(spec.seed);

  std::vector<std::vector<double>> user_latent(spec.users, std::vector<double>(spec.rank));
  std::vector<std::vector<double>> service_latent(spec.services, std::vector<double>(spec.rank));
  for (auto& row : user_latent) {
    for (double& v : row) v = uniform_real(rng, 0.2, 1.2);
  }
  for (auto& row : service_latent) {
    for (double& v : row) v = uniform_real(rng, 0.2, 1.2);
  }

  // deviant users: permuted latent factors at an inflated scale
  const auto n_grey = static_cast<std::size_t>(
      std::llround(spec.greysheep_fraction * static_cast<double>(spec.users)));
  Rng grey_rng(derive_seed(spec.seed, 0x6E));
  for (std::size_t u : sample_without_replacement(spec.users, n_grey, grey_rng)) {
    auto& row = user_latent[u];
    shuffle(row, grey_rng);
    for (double& v : row) v *= spec.greysheep_scale;
  }

  std::vector<double> phase(spec.rank);
  for (double& p : phase) p = uniform_real(rng, 0.0, 6.283185307179586);

  std::vector<QoSRecord> records;
  Rng sample_rng(derive_seed(spec.seed, 0x5A));
  Rng noise_rng(derive_seed(spec.seed, 0xA5));
  for (std::uint32_t t = 0; t < spec.time_steps; ++t) {
    for (std::uint32_t u = 0; u < spec.users; ++u) {
      for (std::uint32_t s = 0; s < spec.services; ++s) {
        if (uniform01(sample_rng) >= spec.density) continue;
        double base = 0.0;
        for (std::size_t k = 0; k < spec.rank; ++k) {
          const double season =
              1.0 + 0.3 * std::sin(6.283185307179586 * static_cast<double>(t) /
                                       static_cast<double>(spec.time_steps) +
                                   phase[k]);
          base += user_latent[u][k] * service_latent[s][k] * season;
        }
        double value = base * (1.0 + spec.noise * normal01(noise_rng));
        if (value < 1e-3) value = 1e-3;
        records.push_back(QoSRecord{u, s, t, value});
      }
    }
  }
  return SparseQoSTensor::from_records(spec.users, spec.services, spec.time_steps,
                                       std::move(records));
}

CorruptionResult corrupt_records(const std::vector<QoSRecord>& records, double fraction,
                                 double scale, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw ConfigError("corruption fraction must be in [0,1]");
  CorruptionResult out;
  out.records = records;
  const auto k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(records.size())));
  Rng rng(seed);
  out.corrupted = sample_without_replacement(records.size(), k, rng);
  std::sort(out.corrupted.begin(), out.corrupted.end());
  for (std::size_t i : out.corrupted) out.records[i].value *= scale;
  return out;
}

SparseQoSTensor with_records(const SparseQoSTensor& like, std::vector<QoSRecord> records) {
  return SparseQoSTensor::from_records(like.users(), like.services(), like.time_steps(),
                                       std::move(records));
}

void write_wsdream(const std::string& path, const SparseQoSTensor& tensor) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  char buf[64];
  for (const auto& r : tensor.all_records()) {
    std::snprintf(buf, sizeof(buf), "%.10g", r.value);
    os << r.user << " " << r.service << " " << r.time << " " << buf << "\n";
  }
}

}  // namespace hctn
