#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hctn/autograd.hpp"
#include "hctn/rng.hpp"

namespace hctn {

/// Named learnable leaves of one model, in registration order.
class ParamRegistry {
 public:
  NodePtr add(Tensor value, const std::string& name);
  const std::vector<NodePtr>& all() const { return params_; }
  NodePtr find(const std::string& name) const;

 private:
  std::vector<NodePtr> params_;
};

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape,
                      Rng& rng);

/// Affine map x -> x.W + b on row-feature matrices.
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out, const std::string& name, ParamRegistry& reg, Rng& rng);
  NodePtr forward(const NodePtr& x) const;
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

  NodePtr weight, bias;

 private:
  std::size_t in_ = 0, out_ = 0;
};

/// Per-feature batch normalization over the row (sample) axis with learnable
/// scale/shift and EMA running statistics for eval mode. Train-mode backward
/// differentiates through the batch mean and variance.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t features, const std::string& name, ParamRegistry& reg, double momentum = 0.9,
            double eps = 1e-9);

  NodePtr forward(const NodePtr& x, bool train);

  NodePtr gamma, beta;
  Tensor running_mean, running_var;
  std::string state_name;

 private:
  std::size_t features_ = 0;
  double momentum_ = 0.9;
  double eps_ = 1e-5;
};

/// Conv1D with "same" padding; input L x Cin, output L x Cout.
class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
              const std::string& name, ParamRegistry& reg, Rng& rng);
  NodePtr forward(const NodePtr& x) const;

  NodePtr weight, bias;
};

/// Learned convex combination of two equally-shaped feature sources. Each row
/// gets a score per source from a shared linear scoring map; the softmax of
/// the two scores weights the sources.
class SoftAttentionFuse {
 public:
  SoftAttentionFuse() = default;
  SoftAttentionFuse(std::size_t features, const std::string& name, ParamRegistry& reg, Rng& rng);
  NodePtr forward(const NodePtr& a, const NodePtr& b) const;
  /// The row-wise source weights (R x 2), for tests.
  NodePtr weights(const NodePtr& a, const NodePtr& b) const;

  NodePtr score_w, score_b;
};

}  // namespace hctn
