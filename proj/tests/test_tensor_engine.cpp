#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "doctest.h"
#include "hctn/autograd.hpp"
#include "hctn/checkpoint.hpp"
#include "hctn/errors.hpp"
#include "hctn/nn.hpp"
#include "hctn/optimizer.hpp"
#include "hctn/rng.hpp"

using namespace hctn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform_real(rng, lo, hi);
  return t;
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-4});
  return std::abs(a - b) / scale;
}

/// Central finite differences against the analytic gradient for a scalar
/// graph built by `make_loss` from the given leaves.
void check_gradients(const std::vector<NodePtr>& leaves,
                     const std::function<NodePtr()>& make_loss, double tol = 1e-4,
                     double h = 1e-5) {
  NodePtr loss = make_loss();
  backward(loss);
  for (const auto& leaf : leaves) {
    REQUIRE(!leaf->grad.empty());
    for (std::size_t i = 0; i < leaf->value.size(); ++i) {
      const double orig = leaf->value[i];
      leaf->value[i] = orig + h;
      const double up = make_loss()->value[0];
      leaf->value[i] = orig - h;
      const double dn = make_loss()->value[0];
      leaf->value[i] = orig;
      const double numeric = (up - dn) / (2.0 * h);
      INFO("leaf ", leaf->name, " index ", i, " analytic ", leaf->grad[i], " numeric ", numeric);
      CHECK(rel_err(leaf->grad[i], numeric) < tol);
    }
  }
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  NodePtr x = constant(Tensor::from_rows({{0.0, 0.0}}));
  NodePtr y = softmax_rows(x);
  CHECK(y->value.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y->value.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(7);
  NodePtr x = constant(random_tensor({5, 9}, rng, -4.0, 4.0));
  NodePtr y = softmax_rows(x);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 9; ++j) s += y->value.at(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("gradient of sum of squares") {
  NodePtr x = parameter(Tensor::from_rows({{1.0, 2.0}}), "x");
  NodePtr loss = sum_all(square(x));
  backward(loss);
  CHECK(x->grad[0] == doctest::Approx(2.0));
  CHECK(x->grad[1] == doctest::Approx(4.0));
}

TEST_CASE("three-layer composite matches finite differences") {
  Rng rng(11);
  NodePtr x = constant(random_tensor({4, 3}, rng));
  NodePtr w1 = parameter(random_tensor({3, 5}, rng), "w1");
  NodePtr b1 = parameter(random_tensor({1, 5}, rng), "b1");
  NodePtr w2 = parameter(random_tensor({5, 4}, rng), "w2");
  NodePtr w3 = parameter(random_tensor({4, 2}, rng), "w3");
  auto make_loss = [&] {
    NodePtr h1 = tanh_op(add_rowvec(matmul(x, w1), b1));
    NodePtr h2 = sigmoid(matmul(h1, w2));
    return mean_all(square(matmul(h2, w3)));
  };
  check_gradients({w1, b1, w2, w3}, make_loss);
}

TEST_CASE("elementwise and reduction op gradients") {
  Rng rng(13);
  NodePtr a = parameter(random_tensor({3, 4}, rng, 0.3, 2.0), "a");
  NodePtr b = parameter(random_tensor({3, 4}, rng, 0.3, 2.0), "b");

  SUBCASE("hadamard + log") {
    check_gradients({a, b}, [&] { return mean_all(log_op(hadamard(a, b))); });
  }
  SUBCASE("log1p + scale + add_scalar") {
    check_gradients({a}, [&] { return mean_all(log1p_op(add_scalar(scale(a, 0.7), 0.2))); });
  }
  SUBCASE("sub + square + sum_axis") {
    check_gradients({a, b}, [&] { return mean_all(sum_axis(square(sub(a, b)), 1)); });
  }
  SUBCASE("mean_axis both axes") {
    check_gradients({a}, [&] { return sum_all(mean_axis(mean_axis(a, 0), 1)); });
  }
  SUBCASE("relu away from the kink") {
    check_gradients({a}, [&] { return mean_all(relu(add_scalar(a, 0.05))); });
  }
}

TEST_CASE("structural op gradients") {
  Rng rng(17);
  NodePtr a = parameter(random_tensor({4, 3}, rng), "a");
  NodePtr b = parameter(random_tensor({2, 3}, rng), "b");
  NodePtr c = parameter(random_tensor({4, 2}, rng), "c");

  SUBCASE("concat_rows + slice_rows") {
    check_gradients({a, b}, [&] {
      NodePtr cat = concat_rows({a, b});
      return mean_all(square(slice_rows(cat, 1, 5)));
    });
  }
  SUBCASE("concat_cols + slice_cols") {
    check_gradients({a, c}, [&] {
      NodePtr cat = concat_cols({a, c});
      return mean_all(square(slice_cols(cat, 2, 5)));
    });
  }
  SUBCASE("transpose + reshape") {
    check_gradients({a}, [&] {
      return mean_all(square(reshape(transpose(a), {2, 6})));
    });
  }
  SUBCASE("softmax gradient") {
    check_gradients({a}, [&] { return mean_all(hadamard(softmax_rows(a), a)); });
  }
  SUBCASE("scale_rows both operands") {
    NodePtr col = parameter(random_tensor({4, 1}, rng, 0.2, 1.5), "col");
    check_gradients({a, col}, [&] { return mean_all(square(scale_rows(a, col))); });
  }
  SUBCASE("gather and stack ops") {
    check_gradients({a, b}, [&] {
      NodePtr g = gather_pairs(a, {{0, 1}, {3, 2}, {1, 0}});
      NodePtr st = stack_entity_rows({b, b}, 1);
      return add(mean_all(square(g)), mean_all(square(st)));
    });
  }
}

TEST_CASE("conv1d same padding gradients and shape") {
  Rng rng(19);
  NodePtr x = parameter(random_tensor({6, 3}, rng), "x");
  NodePtr w = parameter(random_tensor({3, 3, 2}, rng), "w");
  NodePtr bias = parameter(random_tensor({1, 2}, rng), "bias");
  NodePtr y = conv1d_same(x, w, bias);
  CHECK(y->value.rows() == 6);
  CHECK(y->value.cols() == 2);
  check_gradients({x, w, bias}, [&] { return mean_all(square(conv1d_same(x, w, bias))); });
}

TEST_CASE("batch norm train statistics") {
  Rng rng(23);
  ParamRegistry reg;
  BatchNorm bn(4, "bn", reg);
  NodePtr x = constant(random_tensor({64, 4}, rng, -3.0, 5.0));
  NodePtr y = bn.forward(x, /*train=*/true);
  // gamma=1, beta=0 at construction: output is the normalized batch
  for (std::size_t j = 0; j < 4; ++j) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 64; ++i) mu += y->value.at(i, j);
    mu /= 64.0;
    for (std::size_t i = 0; i < 64; ++i) {
      const double d = y->value.at(i, j) - mu;
      var += d * d;
    }
    var /= 64.0;
    CHECK(std::abs(mu) < 1e-8);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("batch norm gradients, train and eval") {
  Rng rng(29);
  ParamRegistry reg;
  BatchNorm bn(3, "bn", reg);
  NodePtr x = parameter(random_tensor({5, 3}, rng, -2.0, 2.0), "x");
  // perturb gamma/beta so the gradient is not trivial
  bn.gamma->value.at(0, 1) = 1.4;
  bn.beta->value.at(0, 2) = -0.3;

  SUBCASE("train mode differentiates through batch statistics") {
    check_gradients({x, bn.gamma, bn.beta},
                    [&] { return mean_all(square(bn.forward(x, true))); }, 2e-4);
  }
  SUBCASE("eval mode uses running statistics") {
    bn.forward(constant(random_tensor({32, 3}, rng)), true);  // populate stats
    check_gradients({x, bn.gamma, bn.beta},
                    [&] { return mean_all(square(bn.forward(x, false))); });
  }
}

TEST_CASE("dropout identity cases") {
  Rng rng(31);
  NodePtr x = constant(random_tensor({4, 4}, rng));
  CHECK(dropout(x, 0.0, 1, true).get() == x.get());
  CHECK(dropout(x, 0.5, 1, false).get() == x.get());
}

TEST_CASE("dropout mask is seed-deterministic and scales kept values") {
  Rng rng(37);
  NodePtr x = constant(random_tensor({8, 8}, rng, 0.5, 1.5));
  NodePtr d1 = dropout(x, 0.4, 99, true);
  NodePtr d2 = dropout(x, 0.4, 99, true);
  for (std::size_t i = 0; i < d1->value.size(); ++i) {
    CHECK(d1->value[i] == d2->value[i]);
    const bool kept = d1->value[i] != 0.0;
    if (kept) CHECK(d1->value[i] == doctest::Approx(x->value[i] / 0.6));
  }
}

TEST_CASE("dropout gradient uses the frozen mask") {
  Rng rng(43);
  NodePtr x = parameter(random_tensor({6, 5}, rng, 0.3, 1.2), "x");
  check_gradients({x}, [&] { return mean_all(square(dropout(x, 0.4, 1234, true))); });
}

TEST_CASE("shape errors name both shapes") {
  NodePtr a = constant(Tensor(2, 3));
  NodePtr b = constant(Tensor(4, 2));
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("2x3"), ShapeError);
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("non-finite results trip a numeric error") {
  NodePtr z = constant(Tensor(1, 1));
  CHECK_THROWS_AS(log_op(z), NumericError);  // log 0 = -inf
}

TEST_CASE("adamw single step matches the hand-evaluated update") {
  NodePtr p = parameter(Tensor::full({1}, 1.0), "p");
  AdamW opt({0.1, 0.9, 0.999, 1e-8, 0.0});

  SUBCASE("zero gradient and zero decay is a fixed point") {
    p->ensure_grad();
    opt.step({p});
    CHECK(p->value[0] == doctest::Approx(1.0));
  }
  SUBCASE("unit gradient moves by ~lr") {
    p->ensure_grad();
    p->grad[0] = 1.0;
    opt.step({p});
    // mhat = 1, vhat = 1 -> p = 1 - 0.1 * 1/(1 + 1e-8)
    CHECK(p->value[0] == doctest::Approx(0.9).epsilon(1e-7));
  }
}

TEST_CASE("adamw decoupled decay does not flow through moments") {
  NodePtr p = parameter(Tensor::full({1}, 1.0), "p");
  AdamW opt({0.1, 0.9, 0.999, 1e-8, 0.1});
  p->ensure_grad();
  opt.step({p});
  CHECK(p->value[0] == doctest::Approx(0.99));
}

TEST_CASE("adamw rejects non-finite gradients by name") {
  NodePtr p = parameter(Tensor::full({1}, 1.0), "theta");
  p->ensure_grad();
  p->grad[0] = std::numeric_limits<double>::quiet_NaN();
  AdamW opt;
  CHECK_THROWS_WITH_AS(opt.step({p}), doctest::Contains("theta"), NumericError);
}

TEST_CASE("checkpoint round trip preserves names, shapes and bytes") {
  Rng rng(41);
  Checkpoint ck;
  ck.put("layer.weight", random_tensor({3, 4}, rng));
  ck.put("layer.bias", random_tensor({1, 4}, rng));
  ck.put("cube", random_tensor({2, 3, 2}, rng));
  const std::string path = "ck_roundtrip.bin";
  ck.save(path);
  Checkpoint back = Checkpoint::load(path);
  REQUIRE(back.entries.size() == 3);
  for (const auto& [name, t] : ck.entries) {
    const Tensor& r = back.require(name);
    REQUIRE(r.same_shape(t));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(r[i] == t[i]);
  }
  CHECK(back.find("nope") == nullptr);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects foreign files") {
  const std::string path = "ck_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE data";
  }
  CHECK_THROWS_AS(Checkpoint::load(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("backward visits shared subgraphs once") {
  // y = x + x; dy/dx = 2 — double-counting would give 4
  NodePtr x = parameter(Tensor::full({1}, 3.0), "x");
  NodePtr y = add(x, x);
  backward(sum_all(y));
  CHECK(x->grad[0] == doctest::Approx(2.0));
}
