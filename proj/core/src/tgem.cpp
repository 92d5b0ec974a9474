#include "hctn/tgem.hpp"

#include <cmath>

#include "hctn/errors.hpp"
#include "hctn/rng.hpp"

namespace hctn {

Tensor positional_encoding(std::size_t steps, std::size_t width) {
  if (width % 2 != 0) throw ConfigError("positional_encoding: width must be even");
  Tensor pe(steps, width);
  for (std::size_t pos = 0; pos < steps; ++pos) {
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<double>(i) /
                                                  static_cast<double>(width));
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

NodePtr scaled_dot_attention(const NodePtr& q, const NodePtr& k, const NodePtr& v,
                             std::size_t d_k) {
  if (q->value.cols() != k->value.cols()) {
    throw ShapeError("scaled_dot_attention: Q/K width mismatch");
  }
  if (k->value.rows() != v->value.rows()) {
    throw ShapeError("scaled_dot_attention: K/V row mismatch");
  }
  NodePtr scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
  return matmul(softmax_rows(scores), v);
}

MhaParams::MhaParams(std::size_t width_, std::size_t heads_n, std::size_t head_dim_,
                     const std::string& name, ParamRegistry& reg, Rng& rng)
    : width(width_), head_dim(head_dim_) {
  if (heads_n * head_dim_ != width_) {
    throw ConfigError("mha: heads * head_dim (" + std::to_string(heads_n * head_dim_) +
                      ") must equal width (" + std::to_string(width_) + ")");
  }
  for (std::size_t h = 0; h < heads_n; ++h) {
    const std::string p = name + ".head" + std::to_string(h);
    Head head;
    head.wq = reg.add(glorot_uniform(width, head_dim, {width, head_dim}, rng), p + ".wq");
    head.bq = reg.add(Tensor(1, head_dim), p + ".bq");
    head.wk = reg.add(glorot_uniform(width, head_dim, {width, head_dim}, rng), p + ".wk");
    head.bk = reg.add(Tensor(1, head_dim), p + ".bk");
    head.wv = reg.add(glorot_uniform(width, head_dim, {width, head_dim}, rng), p + ".wv");
    head.bv = reg.add(Tensor(1, head_dim), p + ".bv");
    heads.push_back(std::move(head));
  }
  w_out = reg.add(glorot_uniform(width, width, {width, width}, rng), name + ".w_out");
  b_out = reg.add(Tensor(1, width), name + ".b_out");
}

NodePtr mha(const NodePtr& features, const MhaParams& params) {
  if (features->value.cols() != params.width) {
    throw ShapeError("mha: feature width " + std::to_string(features->value.cols()) +
                     " vs configured " + std::to_string(params.width));
  }
  std::vector<NodePtr> outputs;
  outputs.reserve(params.heads.size());
  for (const auto& head : params.heads) {
    NodePtr q = add_rowvec(matmul(features, head.wq), head.bq);
    NodePtr k = add_rowvec(matmul(features, head.wk), head.bk);
    NodePtr v = add_rowvec(matmul(features, head.wv), head.bv);
    outputs.push_back(scaled_dot_attention(q, k, v, params.head_dim));
  }
  return add_rowvec(matmul(concat_cols(outputs), params.w_out), params.b_out);
}

TgemParams::TgemParams(std::size_t f2_, std::size_t window_, std::size_t heads, std::size_t kernel,
                       double dropout, ParamRegistry& reg, Rng& rng)
    : f2(f2_), window(window_), dropout_rate(dropout) {
  if (f2 % 4 != 0) throw ConfigError("tgem: f2 must be divisible by 4");
  if (window % 4 != 0) throw ConfigError("tgem: window must be divisible by 4");
  const std::size_t reduced = f2 / 4;
  if (reduced % heads != 0) {
    throw ConfigError("tgem: heads must divide f2/4 = " + std::to_string(reduced));
  }
  bn_input = BatchNorm(f2, "tgem.bn_input", reg);
  bn_reduced = BatchNorm(reduced, "tgem.bn_reduced", reg);
  bn_output = BatchNorm(f2, "tgem.bn_output", reg);
  reduce = Dense(f2, reduced, "tgem.reduce", reg, rng);
  restore = Dense(reduced, f2, "tgem.restore", reg, rng);
  attention = MhaParams(reduced, heads, reduced / heads, "tgem.mha", reg, rng);
  conv_pool = Conv1dLayer(window, window / 4, kernel, "tgem.conv_pool", reg, rng);
  conv_restore = Conv1dLayer(window / 4, window, kernel, "tgem.conv_restore", reg, rng);
  step_reduce = Dense(f2, reduced, "tgem.step_reduce", reg, rng);
  step_restore = Dense(reduced, f2, "tgem.step_restore", reg, rng);
  fuse = SoftAttentionFuse(f2, "tgem.fuse", reg, rng);
}

std::vector<NodePtr> e_block(const std::vector<NodePtr>& z3, TgemParams& params, bool train) {
  const std::size_t window = z3.size();
  if (window != params.window) throw ShapeError("e_block: window mismatch");
  const std::size_t entities = z3[0]->value.rows();

  NodePtr normed = params.bn_input.forward(concat_rows(z3), train);
  std::vector<NodePtr> normed_steps, reduced_steps;
  const Tensor pe = positional_encoding(window, params.f2);
  for (std::size_t t = 0; t < window; ++t) {
    NodePtr step = slice_rows(normed, t * entities, (t + 1) * entities);
    normed_steps.push_back(step);
    Tensor pe_rows(entities, params.f2);
    for (std::size_t i = 0; i < entities; ++i) {
      for (std::size_t j = 0; j < params.f2; ++j) pe_rows.at(i, j) = pe.at(t, j);
    }
    NodePtr with_pe = add(step, constant(std::move(pe_rows), "pe"));
    reduced_steps.push_back(params.reduce.forward(with_pe));
  }

  NodePtr reduced_norm = params.bn_reduced.forward(concat_rows(reduced_steps), train);
  std::vector<NodePtr> z5;
  for (std::size_t t = 0; t < window; ++t) {
    z5.push_back(slice_rows(reduced_norm, t * entities, (t + 1) * entities));
  }

  std::vector<NodePtr> attended(entities);
  for (std::size_t i = 0; i < entities; ++i) {
    attended[i] = mha(stack_entity_rows(z5, i), params.attention);
  }

  std::vector<NodePtr> z7;
  for (std::size_t t = 0; t < window; ++t) {
    NodePtr restored = params.restore.forward(gather_step_rows(attended, t));
    z7.push_back(add(restored, normed_steps[t]));
  }

  NodePtr out_norm = params.bn_output.forward(concat_rows(z7), train);
  std::vector<NodePtr> z8;
  for (std::size_t t = 0; t < window; ++t) {
    z8.push_back(slice_rows(out_norm, t * entities, (t + 1) * entities));
  }
  return z8;
}

std::vector<NodePtr> t_block(const std::vector<NodePtr>& z8, TgemParams& params, bool train,
                             std::uint64_t dropout_seed) {
  const std::size_t window = z8.size();
  const std::size_t entities = z8[0]->value.rows();
  std::vector<NodePtr> per_entity(entities);
  for (std::size_t i = 0; i < entities; ++i) {
    // feature axis is the conv length, time steps are the channels
    NodePtr seq = transpose(stack_entity_rows(z8, i));
    NodePtr pooled = params.conv_pool.forward(seq);
    pooled = dropout(pooled, params.dropout_rate, derive_seed(dropout_seed, i), train);
    per_entity[i] = transpose(params.conv_restore.forward(pooled));
  }
  std::vector<NodePtr> out;
  for (std::size_t t = 0; t < window; ++t) {
    out.push_back(add(gather_step_rows(per_entity, t), z8[t]));
  }
  return out;
}

std::vector<NodePtr> f_block(const std::vector<NodePtr>& z8, TgemParams& params, bool train,
                             std::uint64_t dropout_seed) {
  std::vector<NodePtr> out;
  for (std::size_t t = 0; t < z8.size(); ++t) {
    NodePtr h = relu(params.step_reduce.forward(z8[t]));
    h = dropout(h, params.dropout_rate, derive_seed(dropout_seed, t), train);
    h = relu(params.step_restore.forward(h));
    out.push_back(add(h, z8[t]));
  }
  return out;
}

std::vector<NodePtr> tgem_forward(const std::vector<NodePtr>& z3, TgemParams& params, bool train,
                                  std::uint64_t dropout_seed) {
  std::vector<NodePtr> z8 = e_block(z3, params, train);
  std::vector<NodePtr> zt = t_block(z8, params, train, derive_seed(dropout_seed, 0x7B));
  std::vector<NodePtr> zf = f_block(z8, params, train, derive_seed(dropout_seed, 0xFB));
  std::vector<NodePtr> x3;
  for (std::size_t t = 0; t < z3.size(); ++t) {
    x3.push_back(params.fuse.forward(zt[t], zf[t]));
  }
  return x3;
}

}  // namespace hctn
