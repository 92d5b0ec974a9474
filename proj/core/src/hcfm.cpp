#include "hctn/hcfm.hpp"

#include "hctn/errors.hpp"

namespace hctn {

NodePtr graph_conv(const NodePtr& a_norm, const NodePtr& x, const NodePtr& w) {
  return relu(matmul(matmul(a_norm, x), w));
}

NodePtr layer_aggregate(const std::vector<NodePtr>& xs) {
  if (xs.empty()) throw ShapeError("layer_aggregate: empty tuple");
  NodePtr acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) {
    acc = add(acc, scale(xs[i], 1.0 / static_cast<double>(i + 1)));
  }
  return acc;
}

HcnParams::HcnParams(std::size_t f1_, std::size_t f2_, std::size_t layers_, ParamRegistry& reg,
                     Rng& rng)
    : layers(layers_), f1(f1_), f2(f2_) {
  input_full = Dense(f1, f2, "hcn.input_full", reg, rng);
  input_user = Dense(f1, f2, "hcn.input_user", reg, rng);
  input_service = Dense(f1, f2, "hcn.input_service", reg, rng);
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string suffix = std::to_string(i);
    w_fig.push_back(reg.add(glorot_uniform(f2, f2, {f2, f2}, rng), "hcn.fcu.w" + suffix));
    w_suig.push_back(reg.add(glorot_uniform(f2, f2, {f2, f2}, rng), "hcn.sucu.w" + suffix));
    w_ssig.push_back(reg.add(glorot_uniform(f2, f2, {f2, f2}, rng), "hcn.sscu.w" + suffix));
  }
  fuse = SoftAttentionFuse(f2, "hcn.fuse", reg, rng);
  skip_resize = Dense(f1, f2, "hcfm.skip_resize", reg, rng);
}

SnapshotNodes snapshot_nodes(const HypergraphSnapshot& snap) {
  return SnapshotNodes{constant(snap.adjacency_norm, "a_norm"),
                       constant(snap.user_norm, "a_u_norm"),
                       constant(snap.service_norm, "a_s_norm")};
}

NodePtr hcn_forward(const SnapshotNodes& snap, const NodePtr& x0, const NodePtr& xu,
                    const NodePtr& xs, const HcnParams& params) {
  std::vector<NodePtr> hetero{params.input_full.forward(x0)};
  std::vector<NodePtr> homo_user{params.input_user.forward(xu)};
  std::vector<NodePtr> homo_service{params.input_service.forward(xs)};
  for (std::size_t i = 0; i < params.layers; ++i) {
    hetero.push_back(graph_conv(snap.full, hetero.back(), params.w_fig[i]));
    homo_user.push_back(graph_conv(snap.user, homo_user.back(), params.w_suig[i]));
    homo_service.push_back(graph_conv(snap.service, homo_service.back(), params.w_ssig[i]));
  }
  NodePtr agg_hetero = layer_aggregate(hetero);
  NodePtr agg_homo =
      concat_rows({layer_aggregate(homo_user), layer_aggregate(homo_service)});
  return params.fuse.forward(agg_hetero, agg_homo);
}

CollaborativeFeatures hcfm_forward(const std::vector<SnapshotNodes>& snapshots,
                                   const std::vector<NodePtr>& x0, const std::vector<NodePtr>& xu,
                                   const std::vector<NodePtr>& xs, const HcnParams& params) {
  if (snapshots.size() != x0.size() || x0.size() != xu.size() || xu.size() != xs.size()) {
    throw ShapeError("hcfm_forward: window length mismatch");
  }
  CollaborativeFeatures out;
  for (std::size_t t = 0; t < snapshots.size(); ++t) {
    out.x1.push_back(hcn_forward(snapshots[t], x0[t], xu[t], xs[t], params));
    out.y1.push_back(add(out.x1.back(), params.skip_resize.forward(x0[t])));
  }
  return out;
}

}  // namespace hctn
