#pragma once

#include <vector>

#include "hctn/autograd.hpp"
#include "hctn/gpam.hpp"
#include "hctn/hypergraph.hpp"
#include "hctn/nn.hpp"

namespace hctn {

/// relu(A_hat . X . W) — one graph convolution unit.
NodePtr graph_conv(const NodePtr& a_norm, const NodePtr& x, const NodePtr& w);

/// Layer-decay aggregation X_0 + sum_{i>=1} X_i / (i+1); the tuple holds the
/// dense-mapped input followed by the l convolution outputs.
NodePtr layer_aggregate(const std::vector<NodePtr>& xs);

/// Learnable state of one HCN applied at every time step. The three branch
/// weight stacks are separate units and are not shared.
struct HcnParams {
  HcnParams() = default;
  HcnParams(std::size_t f1, std::size_t f2, std::size_t layers, ParamRegistry& reg, Rng& rng);

  std::size_t layers = 0, f1 = 0, f2 = 0;
  Dense input_full, input_user, input_service;  // f1 -> f2
  std::vector<NodePtr> w_fig, w_suig, w_ssig;   // per-layer f2 x f2
  SoftAttentionFuse fuse;
  Dense skip_resize;  // f1 -> f2, shared across steps
};

/// Normalized propagation matrices of one snapshot as graph constants.
struct SnapshotNodes {
  NodePtr full;     // A-hat, N x N
  NodePtr user;     // A_u-hat, n x n
  NodePtr service;  // A_s-hat, m x m
};

SnapshotNodes snapshot_nodes(const HypergraphSnapshot& snap);

/// One HCN block: dense-mapped inputs, l rounds of FCU/SUCU/SSCU, per-branch
/// layer aggregation, row-concatenation of the homogeneous branches, and
/// soft-attention fusion with the heterogeneous branch.
NodePtr hcn_forward(const SnapshotNodes& snap, const NodePtr& x0, const NodePtr& xu,
                    const NodePtr& xs, const HcnParams& params);

struct CollaborativeFeatures {
  std::vector<NodePtr> x1;  // per-step HCN outputs, N x f2
  std::vector<NodePtr> y1;  // after the resized GPAM skip connection
};

/// Runs the HCN across the window and adds the learned f1->f2 resize of the
/// initial embeddings as a skip connection.
CollaborativeFeatures hcfm_forward(const std::vector<SnapshotNodes>& snapshots,
                                   const std::vector<NodePtr>& x0,
                                   const std::vector<NodePtr>& xu,
                                   const std::vector<NodePtr>& xs, const HcnParams& params);

}  // namespace hctn
