#include "hctn/gpam.hpp"

#include <algorithm>
#include <cmath>

#include "hctn/errors.hpp"
#include "hctn/parallel.hpp"

namespace hctn {

double masked_objective(const TimeSlice& slice, const Tensor& user_factors,
                        const Tensor& service_factors) {
  const std::size_t f = user_factors.cols();
  double acc = 0.0;
  for (const auto& r : slice.all()) {
    double pred = 0.0;
    for (std::size_t k = 0; k < f; ++k) {
      pred += user_factors.at(r.user, k) * service_factors.at(r.service, k);
    }
    const double d = r.value - pred;
    acc += d * d;
  }
  return acc / static_cast<double>(slice.count());
}

MaskedNmfResult masked_nmf(const TimeSlice& slice, std::size_t users, std::size_t services,
                           const MaskedNmfOptions& opts) {
  if (slice.empty()) throw DataError("masked_nmf: slice has no observed entries");
  if (opts.rank < 1) throw ConfigError("masked_nmf: rank must be >= 1");
  if (opts.rank > std::min(users, services)) {
    throw ConfigError("masked_nmf: rank " + std::to_string(opts.rank) + " exceeds min(n,m) = " +
                      std::to_string(std::min(users, services)));
  }

  const std::size_t f = opts.rank;
  Rng rng(opts.seed);
  Tensor w(users, f), h(services, f);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = uniform_real(rng, 0.1, 1.1);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = uniform_real(rng, 0.1, 1.1);

  auto predict = [&](std::uint32_t u, std::uint32_t s) {
    double p = 0.0;
    for (std::size_t k = 0; k < f; ++k) p += w.at(u, k) * h.at(s, k);
    return p;
  };

  MaskedNmfResult out;
  out.objective_history.push_back(masked_objective(slice, w, h));

  Tensor num(users, f), den(users, f);
  Tensor num_s(services, f), den_s(services, f);
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    // user factor half-step; only rows with observations move
    num.zero();
    den.zero();
    for (const auto& r : slice.all()) {
      const double pred = predict(r.user, r.service);
      for (std::size_t k = 0; k < f; ++k) {
        num.at(r.user, k) += r.value * h.at(r.service, k);
        den.at(r.user, k) += pred * h.at(r.service, k);
      }
    }
    for (std::size_t u = 0; u < users; ++u) {
      if (slice.user_row(u).empty()) continue;
      for (std::size_t k = 0; k < f; ++k) {
        w.at(u, k) *= num.at(u, k) / (den.at(u, k) + opts.eps_div);
      }
    }

    // service factor half-step against the refreshed reconstruction
    num_s.zero();
    den_s.zero();
    for (const auto& r : slice.all()) {
      const double pred = predict(r.user, r.service);
      for (std::size_t k = 0; k < f; ++k) {
        num_s.at(r.service, k) += r.value * w.at(r.user, k);
        den_s.at(r.service, k) += pred * w.at(r.user, k);
      }
    }
    for (std::size_t s = 0; s < services; ++s) {
      if (slice.service_positions(s).empty()) continue;
      for (std::size_t k = 0; k < f; ++k) {
        h.at(s, k) *= num_s.at(s, k) / (den_s.at(s, k) + opts.eps_div);
      }
    }

    const double obj = masked_objective(slice, w, h);
    const double prev = out.objective_history.back();
    out.objective_history.push_back(obj);
    if (prev > 0.0 && (prev - obj) / prev < opts.rel_tol) break;
  }

  if (!w.all_finite() || !h.all_finite()) {
    throw NumericError("masked_nmf: factors diverged");
  }
  out.user_factors = std::move(w);
  out.service_factors = std::move(h);
  return out;
}

LatentFeatures build_initial_embeddings(const SparseQoSTensor& tensor, std::size_t target_time,
                                        std::size_t window, const MaskedNmfOptions& opts) {
  if (window < 1 || target_time < window || target_time > tensor.time_steps()) {
    throw ConfigError("build_initial_embeddings: invalid window [" +
                      std::to_string(target_time - window) + ", " + std::to_string(target_time) +
                      ")");
  }
  const std::size_t n = tensor.users(), m = tensor.services();
  LatentFeatures feats;
  feats.rank = opts.rank;
  feats.user.resize(window);
  feats.service.resize(window);
  feats.combined.resize(window);

  std::vector<std::string> failures(window);
  parallel_for(window, [&](std::size_t i) {
    const std::size_t t = target_time - window + i;
    MaskedNmfOptions step_opts = opts;
    step_opts.seed = derive_seed(opts.seed, t);
    try {
      MaskedNmfResult r = masked_nmf(tensor.slice(t), n, m, step_opts);
      Tensor combined(n + m, opts.rank);
      std::copy(r.user_factors.data().begin(), r.user_factors.data().end(), combined.raw());
      std::copy(r.service_factors.data().begin(), r.service_factors.data().end(),
                combined.raw() + n * opts.rank);
      feats.user[i] = std::move(r.user_factors);
      feats.service[i] = std::move(r.service_factors);
      feats.combined[i] = std::move(combined);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < window; ++i) {
    if (!failures[i].empty()) {
      throw DataError("factorization failed at step " + std::to_string(target_time - window + i) +
                      ": " + failures[i]);
    }
  }
  return feats;
}

Tensor nmf_baseline_predict(const SparseQoSTensor& tensor, std::size_t t,
                            const MaskedNmfOptions& opts) {
  MaskedNmfResult r = masked_nmf(tensor.slice(t), tensor.users(), tensor.services(), opts);
  Tensor pred(tensor.users(), tensor.services());
  for (std::size_t u = 0; u < tensor.users(); ++u) {
    for (std::size_t s = 0; s < tensor.services(); ++s) {
      double p = 0.0;
      for (std::size_t k = 0; k < opts.rank; ++k) {
        p += r.user_factors.at(u, k) * r.service_factors.at(s, k);
      }
      pred.at(u, s) = p;
    }
  }
  return pred;
}

}  // namespace hctn
