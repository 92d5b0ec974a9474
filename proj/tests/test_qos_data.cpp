#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "doctest.h"
#include "hctn/errors.hpp"
#include "hctn/qos_data.hpp"

using namespace hctn;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  std::ofstream os(name);
  os << content;
  return name;
}

/// Fully observed n x m slab at every step.
SparseQoSTensor dense_tensor(std::size_t n, std::size_t m, std::size_t steps) {
  std::vector<QoSRecord> records;
  for (std::uint32_t t = 0; t < steps; ++t) {
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t s = 0; s < m; ++s) {
        records.push_back({u, s, t, 0.1 + u + 0.01 * s + 0.001 * t});
      }
    }
  }
  return SparseQoSTensor::from_records(n, m, steps, std::move(records));
}

using Key = std::tuple<std::uint32_t, std::uint32_t>;

std::set<Key> keys(const std::vector<QoSRecord>& rs) {
  std::set<Key> out;
  for (const auto& r : rs) out.insert({r.user, r.service});
  return out;
}

}  // namespace

TEST_CASE("wsdream line maps directly to a record") {
  const auto path = write_temp("wsdream_ok.txt", "0 1 2 0.345\n");
  LoadReport rep = load_wsdream(path, 2, 2, 3);
  REQUIRE(rep.tensor.record_count() == 1);
  const QoSRecord& r = rep.tensor.slice(2).record(0);
  CHECK(r.user == 0);
  CHECK(r.service == 1);
  CHECK(r.time == 2);
  CHECK(r.value == doctest::Approx(0.345));
  std::remove(path.c_str());
}

TEST_CASE("non-positive values are skipped and counted") {
  const auto path = write_temp("wsdream_zero.txt", "0 1 2 0\n0 0 0 -3.5\n1 1 1 2.0\n");
  LoadReport rep = load_wsdream(path, 2, 2, 3);
  CHECK(rep.rejected_nonpositive == 2);
  CHECK(rep.tensor.record_count() == 1);
  std::remove(path.c_str());
}

TEST_CASE("duplicate entries keep the last occurrence") {
  const auto path = write_temp("wsdream_dup.txt", "0 0 0 1.0\n0 0 0 2.5\n");
  LoadReport rep = load_wsdream(path, 1, 1, 1);
  CHECK(rep.duplicates_dropped == 1);
  REQUIRE(rep.tensor.record_count() == 1);
  CHECK(rep.tensor.slice(0).record(0).value == doctest::Approx(2.5));
  std::remove(path.c_str());
}

TEST_CASE("malformed line reports its line number") {
  const auto path = write_temp("wsdream_bad.txt", "0 0 0 1.0\nnot a line\n");
  CHECK_THROWS_WITH_AS(load_wsdream(path, 1, 1, 1), doctest::Contains("line 2"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("out-of-range index is a data error") {
  const auto path = write_temp("wsdream_oob.txt", "5 0 0 1.0\n");
  CHECK_THROWS_AS(load_wsdream(path, 2, 2, 1), DataError);
  std::remove(path.c_str());
}

TEST_CASE("density matches the count formula") {
  SparseQoSTensor t = dense_tensor(4, 5, 3);
  CHECK(t.density() == doctest::Approx(1.0).epsilon(1e-12));
  SparseQoSTensor half = SparseQoSTensor::from_records(10, 10, 1, {{0, 0, 0, 1.0}, {3, 4, 0, 2.0}});
  CHECK(half.density() == doctest::Approx(2.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("split arithmetic: 1000 records at 10% training") {
  SparseQoSTensor t = dense_tensor(25, 40, 5);  // 1000 records per step
  SplitSpec spec;
  spec.train_fraction = 0.10;
  spec.target_time = 4;
  spec.window = 4;
  spec.seed = 7;
  SplitResult r = make_split(t, spec);
  CHECK(r.train.slice(4).count() == 80);
  CHECK(r.validation.size() == 20);
  CHECK(r.test.size() == 900);
  // history fully retained
  for (std::size_t h = 0; h < 4; ++h) CHECK(r.train.slice(h).count() == 1000);
}

TEST_CASE("split is a disjoint partition of the target slice") {
  SparseQoSTensor t = dense_tensor(12, 9, 3);
  SplitSpec spec;
  spec.train_fraction = 0.35;
  spec.target_time = 2;
  spec.window = 2;
  spec.seed = 3;
  SplitResult r = make_split(t, spec);

  auto train_keys = keys({r.train.slice(2).all().begin(), r.train.slice(2).all().end()});
  auto val_keys = keys(r.validation);
  auto test_keys = keys(r.test);
  CHECK(train_keys.size() + val_keys.size() + test_keys.size() == 12 * 9);
  for (const auto& k : val_keys) CHECK(!train_keys.count(k));
  for (const auto& k : test_keys) {
    CHECK(!train_keys.count(k));
    CHECK(!val_keys.count(k));
  }
}

TEST_CASE("same seed gives identical partitions") {
  SparseQoSTensor t = dense_tensor(10, 10, 2);
  SplitSpec spec;
  spec.train_fraction = 0.4;
  spec.target_time = 1;
  spec.window = 1;
  spec.seed = 99;
  SplitResult a = make_split(t, spec);
  SplitResult b = make_split(t, spec);
  REQUIRE(a.test.size() == b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) {
    CHECK(a.test[i].user == b.test[i].user);
    CHECK(a.test[i].service == b.test[i].service);
    CHECK(a.test[i].value == b.test[i].value);
  }
}

TEST_CASE("degenerate fractions are configuration errors") {
  SparseQoSTensor t = dense_tensor(5, 5, 2);
  SplitSpec spec;
  spec.target_time = 1;
  spec.window = 1;
  spec.train_fraction = 1.0;
  CHECK_THROWS_AS(make_split(t, spec), ConfigError);  // empty test set
  spec.train_fraction = 0.001;
  CHECK_THROWS_AS(make_split(t, spec), ConfigError);  // zero train records
}

TEST_CASE("cold start: xi = 0 is the identity") {
  SparseQoSTensor t = dense_tensor(6, 7, 2);
  ColdStartResult r = simulate_cold_start(t, ColdStartMode::CU, 0.0, 5);
  CHECK(r.tensor.record_count() == t.record_count());
  CHECK(r.removed_users.empty());
}

TEST_CASE("cold start removes the ceiling of the user share") {
  // 142 users like the real dataset: ceil(14.2) = 15
  SparseQoSTensor t = dense_tensor(142, 3, 1);
  ColdStartResult r = simulate_cold_start(t, ColdStartMode::CU, 10.0, 17);
  CHECK(r.removed_users.size() == 15);
  CHECK(r.tensor.record_count() == (142 - 15) * 3);
}

TEST_CASE("cold start CB removes both sides, verified by record scan") {
  SparseQoSTensor t = dense_tensor(142, 45, 1);
  ColdStartResult r = simulate_cold_start(t, ColdStartMode::CB, 20.0, 21);
  CHECK(r.removed_users.size() == 29);   // ceil(28.4)
  CHECK(r.removed_services.size() == 9); // ceil(9.0)

  std::vector<bool> user_seen(142, false), service_seen(45, false);
  for (const auto& rec : r.tensor.all_records()) {
    user_seen[rec.user] = true;
    service_seen[rec.service] = true;
  }
  std::size_t users_emptied = 0, services_emptied = 0;
  for (bool b : user_seen) users_emptied += !b;
  for (bool b : service_seen) services_emptied += !b;
  CHECK(users_emptied == 29);
  CHECK(services_emptied == 9);
}

TEST_CASE("cold start at full scale removes 29 users and 900 services") {
  // dims only; selection counts do not depend on the stored records
  SparseQoSTensor t = SparseQoSTensor::from_records(142, 4500, 1, {{0, 0, 0, 1.0}});
  ColdStartResult r = simulate_cold_start(t, ColdStartMode::CB, 20.0, 4);
  CHECK(r.removed_users.size() == 29);
  CHECK(r.removed_services.size() == 900);
}

TEST_CASE("cold start bounds are enforced") {
  SparseQoSTensor t = dense_tensor(4, 4, 1);
  CHECK_THROWS_AS(simulate_cold_start(t, ColdStartMode::CU, 60.0, 1), ConfigError);
  CHECK_THROWS_AS(simulate_cold_start(t, ColdStartMode::CU, -1.0, 1), ConfigError);
}
