#pragma once

#include <cstdint>
#include <vector>

#include "hctn/autograd.hpp"
#include "hctn/nn.hpp"

namespace hctn {

/// Sinusoidal positional encoding: PE(pos, 2i) = sin(pos / 10000^(2i/width)),
/// PE(pos, 2i+1) = cos of the same argument. Width must be even.
Tensor positional_encoding(std::size_t steps, std::size_t width);

/// softmax(Q.K^T / sqrt(d_k)) . V with row-wise softmax.
NodePtr scaled_dot_attention(const NodePtr& q, const NodePtr& k, const NodePtr& v, std::size_t d_k);

struct MhaParams {
  MhaParams() = default;
  MhaParams(std::size_t width, std::size_t heads, std::size_t head_dim, const std::string& name,
            ParamRegistry& reg, Rng& rng);

  struct Head {
    NodePtr wq, bq, wk, bk, wv, bv;  // width x head_dim projections
  };
  std::vector<Head> heads;
  NodePtr w_out, b_out;  // width x width output mix
  std::size_t width = 0, head_dim = 0;
};

/// Per-head Q/K/V projections, scaled-dot attention, head concatenation and
/// the linear output mix. Input and output are steps x width.
NodePtr mha(const NodePtr& features, const MhaParams& params);

/// Learnable state of the temporal granularity extractor.
struct TgemParams {
  TgemParams() = default;
  TgemParams(std::size_t f2, std::size_t window, std::size_t heads, std::size_t kernel,
             double dropout_rate, ParamRegistry& reg, Rng& rng);

  std::size_t f2 = 0, window = 0;
  double dropout_rate = 0.1;
  BatchNorm bn_input, bn_reduced, bn_output;
  Dense reduce;   // f2 -> f2/4
  Dense restore;  // f2/4 -> f2
  MhaParams attention;
  Conv1dLayer conv_pool, conv_restore;  // time channels tau -> tau/4 -> tau
  Dense step_reduce, step_restore;      // f2 -> f2/4 -> f2, both ReLU
  SoftAttentionFuse fuse;
};

/// E-block: BN, +PE, width reduction, BN, per-entity MHA, width restoration,
/// residual from the first BN output, BN. In/out: window of N x f2 steps.
std::vector<NodePtr> e_block(const std::vector<NodePtr>& z3, TgemParams& params, bool train);

/// T-block: two Conv1D layers over the per-entity (feature-length, time-
/// channel) view with dropout between, plus the residual. Output matches z8.
std::vector<NodePtr> t_block(const std::vector<NodePtr>& z8, TgemParams& params, bool train,
                             std::uint64_t dropout_seed);

/// F-block: per-step feature bottleneck (ReLU dense pair with dropout), plus
/// the residual.
std::vector<NodePtr> f_block(const std::vector<NodePtr>& z8, TgemParams& params, bool train,
                             std::uint64_t dropout_seed);

/// Full TGEM pass: soft-attention fusion of the T- and F-block outputs.
std::vector<NodePtr> tgem_forward(const std::vector<NodePtr>& z3, TgemParams& params, bool train,
                                  std::uint64_t dropout_seed);

}  // namespace hctn
