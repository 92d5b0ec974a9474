#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "hctn/errors.hpp"
#include "hctn/synth.hpp"
#include "hctn/train.hpp"

using namespace hctn;

namespace {

Hyperparams tiny_hp() {
  Hyperparams hp;
  hp.window = 4;
  hp.f1 = 3;
  hp.f2 = 8;
  hp.f4 = 4;
  hp.layers = 1;
  hp.heads = 2;
  hp.dropout = 0.0;
  hp.max_epochs = 5;
  hp.nmf_iters = 30;
  hp.seed = 42;
  return hp;
}

SynthSpec small_spec() {
  SynthSpec spec;
  spec.users = 12;
  spec.services = 10;
  spec.time_steps = 8;
  spec.rank = 2;
  spec.density = 0.3;
  spec.seed = 7;
  return spec;
}

SplitSpec small_split() {
  SplitSpec split;
  split.train_fraction = 0.5;
  split.target_time = 7;
  split.window = 4;
  split.seed = 11;
  return split;
}

}  // namespace

TEST_CASE("cauchy loss analytic values") {
  Tensor qhat(2, 2);
  qhat.at(0, 0) = 1.0;
  std::vector<QoSRecord> recs = {{0, 0, 0, 1.0}};
  SUBCASE("perfect prediction gives zero loss") {
    NodePtr l = cauchy_loss(constant(qhat), recs, 1.0);
    CHECK(l->value[0] == doctest::Approx(0.0));
  }
  SUBCASE("residual equal to gamma gives log 2") {
    recs[0].value = 2.0;
    NodePtr l = cauchy_loss(constant(qhat), recs, 1.0);
    CHECK(l->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("residual of three gammas gives log 10") {
    recs[0].value = 4.0;
    NodePtr l = cauchy_loss(constant(qhat), recs, 1.0);
    CHECK(l->value[0] == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SUBCASE("empty set and non-positive gamma are rejected") {
    CHECK_THROWS_AS(cauchy_loss(constant(qhat), {}, 1.0), DataError);
    CHECK_THROWS_AS(cauchy_loss(constant(qhat), recs, 0.0), ConfigError);
  }
}

TEST_CASE("cauchy loss is non-negative, sign-symmetric and monotone") {
  Tensor qhat(1, 1);
  auto loss_for = [&](double truth) {
    std::vector<QoSRecord> recs = {{0, 0, 0, truth}};
    return cauchy_loss(constant(qhat), recs, 2.0)->value[0];
  };
  double prev = loss_for(0.0);
  CHECK(prev == doctest::Approx(0.0));
  for (double r : {0.5, 1.0, 3.0, 10.0}) {
    const double up = loss_for(r);
    const double down = loss_for(-r);
    CHECK(up == doctest::Approx(down).epsilon(1e-12));  // symmetry
    CHECK(up >= 0.0);
    CHECK(up > prev);  // monotone in |residual|
    prev = up;
  }
}

TEST_CASE("inner product head: scalar and one-hot features") {
  SUBCASE("scalar features multiply") {
    NodePtr u = constant(Tensor::from_rows({{2.0}}));
    NodePtr s = constant(Tensor::from_rows({{3.0}}));
    NodePtr q = matmul(u, transpose(s));
    CHECK(q->value.at(0, 0) == doctest::Approx(6.0));
  }
  SUBCASE("one-hot features give the 0/1 match matrix") {
    NodePtr u = constant(Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
    NodePtr s = constant(Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}));
    NodePtr q = matmul(u, transpose(s));
    CHECK(q->value.at(0, 0) == 1.0);
    CHECK(q->value.at(0, 1) == 0.0);
    CHECK(q->value.at(1, 1) == 1.0);
    CHECK(q->value.at(1, 2) == 0.0);
    CHECK(q->value.at(0, 2) == 1.0);
  }
}

TEST_CASE("training loss is non-increasing over the first epochs") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  TrainOutcome out = train_model(data, opts);
  REQUIRE(out.log.size() >= 3);
  for (std::size_t i = 1; i < out.log.size(); ++i) {
    CHECK(out.log[i].train_loss <= out.log[i - 1].train_loss + 1e-9);
  }
}

TEST_CASE("zero learning rate freezes the parameters") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.lr = 0.0;
  opts.hp.weight_decay = 0.0;
  opts.hp.max_epochs = 3;

  HctnModel reference(data.users(), data.services(), opts.hp);
  TrainOutcome out = train_model(data, opts);
  const auto& before = reference.params().all();
  const auto& after = out.model.params().all();
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    REQUIRE(before[i]->name == after[i]->name);
    for (std::size_t k = 0; k < before[i]->value.size(); ++k) {
      CHECK(before[i]->value[k] == after[i]->value[k]);
    }
  }
}

TEST_CASE("training is seed-deterministic") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.max_epochs = 1;
  TrainOutcome a = train_model(data, opts);
  TrainOutcome b = train_model(data, opts);
  REQUIRE(!a.log.empty());
  CHECK(std::abs(a.log[0].train_loss - b.log[0].train_loss) < 1e-12);
  CHECK(a.log[0].val_mae == doctest::Approx(b.log[0].val_mae).epsilon(1e-12));
}

TEST_CASE("prediction is a pure function of the trained state") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.max_epochs = 2;
  TrainOutcome out = train_model(data, opts);
  PredictionResult a = out.model.predict(out.inputs);
  PredictionResult b = out.model.predict(out.inputs);
  for (std::size_t i = 0; i < a.qhat.size(); ++i) CHECK(a.qhat[i] == b.qhat[i]);
}

TEST_CASE("cold-start users still receive finite predictions") {
  SynthSpec spec = small_spec();
  SparseQoSTensor data = generate_synthetic(spec);
  // strip user 0 from every record: a user with no history at all
  std::vector<QoSRecord> kept;
  for (const auto& r : data.all_records()) {
    if (r.user != 0) kept.push_back(r);
  }
  SparseQoSTensor cold = with_records(data, kept);

  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.max_epochs = 2;
  TrainOutcome out = train_model(cold, opts);
  PredictionResult pred = out.model.predict(out.inputs);
  for (std::size_t s = 0; s < cold.services(); ++s) {
    CHECK(std::isfinite(pred.at(0, s)));
  }
}

TEST_CASE("prediction survives empty history slices when latent features are given") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.max_epochs = 2;
  TrainOutcome out = train_model(data, opts);

  // a window whose oldest slice is empty; latent features come from training
  std::vector<QoSRecord> kept;
  for (const auto& r : out.split.train.all_records()) {
    if (r.time != 3) kept.push_back(r);
  }
  SparseQoSTensor holey = with_records(out.split.train, kept);
  ModelInputs inputs = prepare_inputs(holey, opts.split.target_time, opts.hp, &out.inputs.latent);
  PredictionResult pred = out.model.predict(inputs);
  for (std::size_t i = 0; i < pred.qhat.size(); ++i) CHECK(std::isfinite(pred.qhat[i]));
}

TEST_CASE("model checkpoint round trip restores identical predictions") {
  SparseQoSTensor data = generate_synthetic(small_spec());
  TrainOptions opts{tiny_hp(), small_split()};
  opts.hp.max_epochs = 2;
  TrainOutcome out = train_model(data, opts);
  PredictionResult before = out.model.predict(out.inputs);

  Checkpoint ck = out.model.to_checkpoint(out.inputs);
  const std::string path = "model_roundtrip.bin";
  ck.save(path);
  auto [restored, latent] = HctnModel::from_checkpoint(Checkpoint::load(path));
  ModelInputs inputs =
      prepare_inputs(out.split.train, opts.split.target_time, restored.hyperparams(), &latent);
  PredictionResult after = restored.predict(inputs);
  for (std::size_t i = 0; i < before.qhat.size(); ++i) {
    CHECK(before.qhat[i] == doctest::Approx(after.qhat[i]).epsilon(1e-12));
  }
  std::remove(path.c_str());
}

TEST_CASE("hyperparameter validation catches bad configurations") {
  Hyperparams hp = tiny_hp();
  hp.window = 6;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = tiny_hp();
  hp.heads = 3;  // f2/4 = 2 not divisible by 3
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = tiny_hp();
  hp.gamma = 0.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
}
