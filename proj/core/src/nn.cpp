#include "hctn/nn.hpp"

#include <cmath>

#include "hctn/errors.hpp"

namespace hctn {

NodePtr ParamRegistry::add(Tensor value, const std::string& name) {
  for (const auto& p : params_) {
    if (p->name == name) throw ConfigError("duplicate parameter name: " + name);
  }
  NodePtr p = parameter(std::move(value), name);
  params_.push_back(p);
  return p;
}

NodePtr ParamRegistry::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p;
  }
  return nullptr;
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape,
                      Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform_real(rng, -limit, limit);
  return t;
}

Dense::Dense(std::size_t in, std::size_t out, const std::string& name, ParamRegistry& reg, Rng& rng)
    : in_(in), out_(out) {
  weight = reg.add(glorot_uniform(in, out, {in, out}, rng), name + ".weight");
  // small positive bias keeps ReLU pre-activations off the exact kink for
  // rows whose inputs are all zero
  bias = reg.add(Tensor::full({1, out}, 0.01), name + ".bias");
}

NodePtr Dense::forward(const NodePtr& x) const { return add_rowvec(matmul(x, weight), bias); }

BatchNorm::BatchNorm(std::size_t features, const std::string& name, ParamRegistry& reg,
                     double momentum, double eps)
    : state_name(name), features_(features), momentum_(momentum), eps_(eps) {
  // eps defaults to 1e-9: small enough that the normalized batch variance
  // stays within 1e-6 of 1 for any non-degenerate feature column
  gamma = reg.add(Tensor::full({1, features}, 1.0), name + ".gamma");
  beta = reg.add(Tensor(1, features), name + ".beta");
  running_mean = Tensor(1, features);
  running_var = Tensor::full({1, features}, 1.0);
}

NodePtr BatchNorm::forward(const NodePtr& x, bool train) {
  if (x->value.ndim() != 2 || x->value.cols() != features_) {
    throw ShapeError("batch_norm: input " + x->value.shape_str() + " vs features " +
                     std::to_string(features_));
  }
  const std::size_t rows = x->value.rows(), cols = features_;
  const double eps = eps_;

  auto mean = std::make_shared<Tensor>(1, cols);
  auto var = std::make_shared<Tensor>(1, cols);
  if (train) {
    for (std::size_t j = 0; j < cols; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < rows; ++i) mu += x->value.at(i, j);
      mu /= static_cast<double>(rows);
      double v = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        const double d = x->value.at(i, j) - mu;
        v += d * d;
      }
      v /= static_cast<double>(rows);
      mean->at(0, j) = mu;
      var->at(0, j) = v;
      running_mean.at(0, j) = momentum_ * running_mean.at(0, j) + (1.0 - momentum_) * mu;
      running_var.at(0, j) = momentum_ * running_var.at(0, j) + (1.0 - momentum_) * v;
    }
  } else {
    *mean = running_mean;
    *var = running_var;
  }

  auto xhat = std::make_shared<Tensor>(rows, cols);
  Tensor out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const double inv = 1.0 / std::sqrt(var->at(0, j) + eps);
    const double g = gamma->value.at(0, j), b = beta->value.at(0, j);
    for (std::size_t i = 0; i < rows; ++i) {
      const double h = (x->value.at(i, j) - mean->at(0, j)) * inv;
      xhat->at(i, j) = h;
      out.at(i, j) = g * h + b;
    }
  }

  NodePtr px = x, pg = gamma, pb = beta;
  return make_node("batch_norm", std::move(out), {x, gamma, beta},
                   [px, pg, pb, xhat, var, rows, cols, eps, train](Node& self) {
                     for (std::size_t j = 0; j < cols; ++j) {
                       const double inv = 1.0 / std::sqrt(var->at(0, j) + eps);
                       const double g = pg->value.at(0, j);
                       double sum_g = 0.0, sum_gx = 0.0;
                       for (std::size_t i = 0; i < rows; ++i) {
                         sum_g += self.grad.at(i, j);
                         sum_gx += self.grad.at(i, j) * xhat->at(i, j);
                       }
                       if (pg->requires_grad) pg->ensure_grad().at(0, j) += sum_gx;
                       if (pb->requires_grad) pb->ensure_grad().at(0, j) += sum_g;
                       if (!px->requires_grad) continue;
                       Tensor& gx = px->ensure_grad();
                       if (train) {
                         // d/dx through batch mean and variance.
                         const double rn = static_cast<double>(rows);
                         for (std::size_t i = 0; i < rows; ++i) {
                           const double go = self.grad.at(i, j) * g;
                           gx.at(i, j) += inv * (go - (g / rn) * sum_g -
                                                 (g / rn) * xhat->at(i, j) * sum_gx);
                         }
                       } else {
                         for (std::size_t i = 0; i < rows; ++i) {
                           gx.at(i, j) += self.grad.at(i, j) * g * inv;
                         }
                       }
                     }
                   });
}

Conv1dLayer::Conv1dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                         const std::string& name, ParamRegistry& reg, Rng& rng) {
  weight = reg.add(
      glorot_uniform(kernel * in_channels, out_channels, {kernel, in_channels, out_channels}, rng),
      name + ".weight");
  bias = reg.add(Tensor(1, out_channels), name + ".bias");
}

NodePtr Conv1dLayer::forward(const NodePtr& x) const { return conv1d_same(x, weight, bias); }

SoftAttentionFuse::SoftAttentionFuse(std::size_t features, const std::string& name,
                                     ParamRegistry& reg, Rng& rng) {
  score_w = reg.add(glorot_uniform(features, 1, {features, 1}, rng), name + ".score_w");
  score_b = reg.add(Tensor(1, 1), name + ".score_b");
}

NodePtr SoftAttentionFuse::weights(const NodePtr& a, const NodePtr& b) const {
  NodePtr sa = add_rowvec(matmul(a, score_w), score_b);
  NodePtr sb = add_rowvec(matmul(b, score_w), score_b);
  return softmax_rows(concat_cols({sa, sb}));
}

NodePtr SoftAttentionFuse::forward(const NodePtr& a, const NodePtr& b) const {
  check_same_shape(a->value, b->value, "soft_attention");
  NodePtr alpha = weights(a, b);
  NodePtr wa = slice_cols(alpha, 0, 1);
  NodePtr wb = slice_cols(alpha, 1, 2);
  return add(scale_rows(a, wa), scale_rows(b, wb));
}

}  // namespace hctn
