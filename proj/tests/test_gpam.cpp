#include <cmath>

#include "doctest.h"
#include "hctn/errors.hpp"
#include "hctn/gpam.hpp"
#include "hctn/rng.hpp"

using namespace hctn;

namespace {

SparseQoSTensor single_slice(std::size_t n, std::size_t m,
                             const std::vector<std::vector<double>>& values) {
  std::vector<QoSRecord> records;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t s = 0; s < m; ++s) {
      if (values[u][s] > 0.0) records.push_back({u, s, 0, values[u][s]});
    }
  }
  return SparseQoSTensor::from_records(n, m, 1, std::move(records));
}

SparseQoSTensor random_masked(std::size_t n, std::size_t m, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<QoSRecord> records;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t s = 0; s < m; ++s) {
      if (uniform01(rng) < density) records.push_back({u, s, 0, uniform_real(rng, 0.5, 4.0)});
    }
  }
  return SparseQoSTensor::from_records(n, m, 1, std::move(records));
}

}  // namespace

TEST_CASE("rank-1 matrix is recovered exactly") {
  // [[1,2],[2,4]] = [1,2]^T [1,2]: a rank-1 non-negative matrix
  SparseQoSTensor t = single_slice(2, 2, {{1.0, 2.0}, {2.0, 4.0}});
  MaskedNmfOptions opts;
  opts.rank = 1;
  opts.max_iters = 500;
  opts.rel_tol = 0.0;
  MaskedNmfResult r = masked_nmf(t.slice(0), 2, 2, opts);
  CHECK(masked_objective(t.slice(0), r.user_factors, r.service_factors) < 1e-6);
}

TEST_CASE("constant matrix reconstructs the constant") {
  SparseQoSTensor t = single_slice(3, 3, {{2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}});
  MaskedNmfOptions opts;
  opts.rank = 1;
  opts.max_iters = 500;
  opts.rel_tol = 0.0;
  MaskedNmfResult r = masked_nmf(t.slice(0), 3, 3, opts);
  for (const auto& rec : t.slice(0).all()) {
    double pred = r.user_factors.at(rec.user, 0) * r.service_factors.at(rec.service, 0);
    CHECK(std::abs(pred - 2.5) < 1e-6);
  }
}

TEST_CASE("masked objective is monotone non-increasing") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SparseQoSTensor t = random_masked(10, 8, 0.5, seed);
    MaskedNmfOptions opts;
    opts.rank = 3;
    opts.max_iters = 100;
    opts.rel_tol = 0.0;
    opts.seed = seed;
    MaskedNmfResult r = masked_nmf(t.slice(0), 10, 8, opts);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-10);
    }
  }
}

TEST_CASE("factors stay non-negative") {
  SparseQoSTensor t = random_masked(8, 6, 0.6, 5);
  MaskedNmfOptions opts;
  opts.rank = 2;
  MaskedNmfResult r = masked_nmf(t.slice(0), 8, 6, opts);
  for (std::size_t i = 0; i < r.user_factors.size(); ++i) CHECK(r.user_factors[i] >= 0.0);
  for (std::size_t i = 0; i < r.service_factors.size(); ++i) CHECK(r.service_factors[i] >= 0.0);
}

TEST_CASE("objective is invariant under factor rescaling") {
  SparseQoSTensor t = random_masked(6, 6, 0.7, 9);
  MaskedNmfOptions opts;
  opts.rank = 2;
  MaskedNmfResult r = masked_nmf(t.slice(0), 6, 6, opts);
  const double base = masked_objective(t.slice(0), r.user_factors, r.service_factors);
  Tensor u = r.user_factors, s = r.service_factors;
  const double c = 3.7;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= c;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] /= c;
  CHECK(std::abs(masked_objective(t.slice(0), u, s) - base) < 1e-9);
}

TEST_CASE("empty slice and oversized rank are rejected") {
  SparseQoSTensor empty(3, 3, 1);
  MaskedNmfOptions opts;
  opts.rank = 1;
  CHECK_THROWS_AS(masked_nmf(empty.slice(0), 3, 3, opts), DataError);

  SparseQoSTensor t = random_masked(3, 5, 0.8, 2);
  opts.rank = 4;  // > min(3,5)
  CHECK_THROWS_AS(masked_nmf(t.slice(0), 3, 5, opts), ConfigError);
}

TEST_CASE("embeddings are deterministic per seed") {
  SparseQoSTensor t = random_masked(6, 5, 0.5, 11);
  std::vector<QoSRecord> twice = t.all_records();
  for (auto& r : twice) r.time = 1;
  auto all = t.all_records();
  all.insert(all.end(), twice.begin(), twice.end());
  SparseQoSTensor two_steps = SparseQoSTensor::from_records(6, 5, 2, all);

  MaskedNmfOptions opts;
  opts.rank = 2;
  opts.seed = 123;
  LatentFeatures a = build_initial_embeddings(two_steps, 2, 2, opts);
  LatentFeatures b = build_initial_embeddings(two_steps, 2, 2, opts);
  for (std::size_t t2 = 0; t2 < 2; ++t2) {
    for (std::size_t i = 0; i < a.user[t2].size(); ++i) {
      CHECK(a.user[t2][i] == b.user[t2][i]);
    }
  }
}

TEST_CASE("combined embedding stacks users over services") {
  SparseQoSTensor t = random_masked(5, 4, 0.6, 13);
  MaskedNmfOptions opts;
  opts.rank = 2;
  LatentFeatures f = build_initial_embeddings(t, 1, 1, opts);
  REQUIRE(f.combined.size() == 1);
  CHECK(f.combined[0].rows() == 9);
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(f.combined[0].at(u, k) == f.user[0].at(u, k));
    }
  }
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(f.combined[0].at(5 + s, k) == f.service[0].at(s, k));
    }
  }
}

TEST_CASE("entities with no observations keep their positive initialization") {
  // user 2 never appears in the slice
  SparseQoSTensor t = single_slice(3, 3, {{1.0, 2.0, 0.0}, {2.0, 0.0, 1.0}, {0.0, 0.0, 0.0}});
  MaskedNmfOptions opts;
  opts.rank = 2;
  opts.max_iters = 50;
  MaskedNmfResult r = masked_nmf(t.slice(0), 3, 3, opts);
  bool nonzero = false;
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::isfinite(r.user_factors.at(2, k)));
    CHECK(r.user_factors.at(2, k) >= 0.0);
    nonzero = nonzero || r.user_factors.at(2, k) > 0.0;
  }
  CHECK(nonzero);  // uniform(0.1, 1.1) init is strictly positive
}
