#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hctn/errors.hpp"
#include "hctn/isolation_forest.hpp"
#include "hctn/rng.hpp"

using namespace hctn;

namespace {

std::vector<QoSRecord> scalar_records(const std::vector<double>& values, std::uint32_t t = 0) {
  std::vector<QoSRecord> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({static_cast<std::uint32_t>(i % 50), static_cast<std::uint32_t>(i / 50), t,
                   values[i]});
  }
  return out;
}

}  // namespace

TEST_CASE("path normalizer identities") {
  CHECK(iforest_path_normalizer(1) == 0.0);
  CHECK(iforest_path_normalizer(2) == doctest::Approx(1.0));  // 2*H(1) - 2*(1)/2
  // c(4) = 2*(1 + 1/2 + 1/3) - 2*3/4
  CHECK(iforest_path_normalizer(4) == doctest::Approx(2.0 * (1.0 + 0.5 + 1.0 / 3.0) - 1.5));
}

TEST_CASE("identical points all score the same") {
  std::vector<std::vector<double>> points(40, {3.14});
  IsolationForestOptions opts;
  opts.seed = 5;
  IsolationForest f = IsolationForest::fit(points, opts);
  const double first = f.score(points[0]);
  for (const auto& p : points) CHECK(f.score(p) == doctest::Approx(first));
}

TEST_CASE("fewer than two points is an error") {
  CHECK_THROWS_AS(IsolationForest::fit({{1.0}}, {}), DataError);
}

TEST_CASE("scoring is deterministic per seed") {
  Rng rng(17);
  std::vector<std::vector<double>> points;
  for (int i = 0; i < 200; ++i) points.push_back({uniform01(rng)});
  IsolationForestOptions opts;
  opts.seed = 99;
  IsolationForest a = IsolationForest::fit(points, opts);
  IsolationForest b = IsolationForest::fit(points, opts);
  for (const auto& p : points) CHECK(a.score(p) == b.score(p));
}

TEST_CASE("a far-away point gets the top score in nearly every seeded run") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(uniform01(rng));
    values.push_back(100.0);
    std::vector<QoSRecord> records = scalar_records(values);
    IsolationForestOptions opts;
    opts.seed = derive_seed(seed, 1);
    std::vector<double> scores = score_records(records, opts);
    const std::size_t planted = values.size() - 1;
    const double top = *std::max_element(scores.begin(), scores.end());
    wins += scores[planted] == top;
  }
  CHECK(wins >= 19);  // >= 95% of 20 seeds
}

TEST_CASE("score grows as the extreme point moves away") {
  std::vector<double> distances = {5.0, 20.0, 80.0};
  std::vector<double> mean_scores;
  for (double d : distances) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      std::vector<std::vector<double>> points;
      for (int i = 0; i < 300; ++i) points.push_back({uniform_real(rng, 0.0, 2.0)});
      points.push_back({d});
      IsolationForestOptions opts;
      opts.seed = derive_seed(seed, 7);
      acc += IsolationForest::fit(points, opts).score(points.back());
    }
    mean_scores.push_back(acc / 10.0);
  }
  CHECK(mean_scores[1] >= mean_scores[0] - 1e-3);
  CHECK(mean_scores[2] >= mean_scores[1] - 1e-3);
}

TEST_CASE("removal count is exact and lambda zero is the identity") {
  Rng rng(13);
  std::vector<double> values;
  for (int i = 0; i < 1000; ++i) values.push_back(uniform_real(rng, 0.1, 2.0));
  std::vector<QoSRecord> records = scalar_records(values);

  IsolationForestOptions opts;
  SUBCASE("lambda = 10 removes exactly 100") {
    OutlierReport rep = remove_outliers(records, 10.0, opts);
    CHECK(rep.removed.size() == 100);
    CHECK(rep.kept.size() == 900);
  }
  SUBCASE("lambda = 0 keeps everything") {
    OutlierReport rep = remove_outliers(records, 0.0, opts);
    CHECK(rep.removed.empty());
    REQUIRE(rep.kept.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(rep.kept[i].value == records[i].value);
    }
  }
  SUBCASE("lambda out of range is rejected") {
    CHECK_THROWS_AS(remove_outliers(records, 51.0, opts), ConfigError);
  }
}

TEST_CASE("planted heavy tail dominates the removals") {
  std::size_t tail_removed = 0, total_removed = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<double> values;
    std::vector<bool> is_tail;
    for (int i = 0; i < 950; ++i) {
      values.push_back(uniform_real(rng, 0.0, 2.0));
      is_tail.push_back(false);
    }
    for (int i = 0; i < 50; ++i) {
      values.push_back(uniform_real(rng, 15.0, 20.0));
      is_tail.push_back(true);
    }
    std::vector<QoSRecord> records = scalar_records(values);
    IsolationForestOptions opts;
    opts.seed = derive_seed(seed, 3);
    OutlierReport rep = remove_outliers(records, 5.0, opts);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!rep.removed_flag[i]) continue;
      ++total_removed;
      tail_removed += is_tail[i];
    }
  }
  CHECK(total_removed == 20 * 50);
  CHECK(static_cast<double>(tail_removed) >= 0.9 * static_cast<double>(total_removed));
}

TEST_CASE("per-step scoring handles degenerate steps") {
  // one record at step 0, a real population at step 1
  std::vector<QoSRecord> records = {{0, 0, 0, 1.0}};
  Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    records.push_back({static_cast<std::uint32_t>(i), 1, 1, uniform_real(rng, 0.2, 1.8)});
  }
  IsolationForestOptions opts;
  std::vector<double> scores = score_records(records, opts);
  CHECK(scores[0] == doctest::Approx(0.5));  // neutral: nothing to compare against
  for (std::size_t i = 1; i < scores.size(); ++i) {
    CHECK(scores[i] > 0.0);
    CHECK(scores[i] < 1.0);
  }
}
