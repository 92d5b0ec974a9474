#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hctn/tensor.hpp"

namespace hctn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode differentiation graph. Holds the forward
/// value, the accumulated gradient (lazily allocated), and a closure that
/// pushes this node's gradient into its parents.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::string name;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
  void accumulate(const Tensor& g);
  void zero_grad();
};

/// Leaf without gradient tracking (data, adjacency matrices, masks).
NodePtr constant(Tensor value, std::string name = "");

/// Learnable leaf; unique names are required for checkpoints/optimizers.
NodePtr parameter(Tensor value, std::string name);

/// Builds an interior node. requires_grad is inherited from parents; the
/// forward value is checked for NaN/Inf and a NumericError names `op`.
NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar (1-element) root. Every reachable node
/// is visited exactly once in reverse topological order.
void backward(const NodePtr& root);

// ---- core ops ----

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr hadamard(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr add_scalar(const NodePtr& a, double c);
/// Adds a 1xC row vector to every row of a RxC matrix.
NodePtr add_rowvec(const NodePtr& a, const NodePtr& row);
/// Multiplies row i of `a` by the scalar col(i, 0).
NodePtr scale_rows(const NodePtr& a, const NodePtr& col);

NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr slice_rows(const NodePtr& a, std::size_t r0, std::size_t r1);
NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1);
NodePtr transpose(const NodePtr& a);
NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape);

NodePtr relu(const NodePtr& a);
NodePtr sigmoid(const NodePtr& a);
NodePtr tanh_op(const NodePtr& a);
NodePtr log_op(const NodePtr& a);
NodePtr log1p_op(const NodePtr& a);
NodePtr square(const NodePtr& a);

/// Row-wise softmax; each output row sums to 1.
NodePtr softmax_rows(const NodePtr& a);

NodePtr sum_all(const NodePtr& a);
NodePtr mean_all(const NodePtr& a);
/// axis 0: column reduction to 1xC; axis 1: row reduction to Rx1.
NodePtr sum_axis(const NodePtr& a, int axis);
NodePtr mean_axis(const NodePtr& a, int axis);

/// Inverted dropout: scales kept activations by 1/(1-rate). Identity when
/// rate == 0 or train == false.
NodePtr dropout(const NodePtr& a, double rate, std::uint64_t seed, bool train);

/// 1-D convolution with "same" zero padding along the first (length) axis.
/// x: L x Cin, w: K x Cin x Cout, bias: 1 x Cout; output L x Cout.
NodePtr conv1d_same(const NodePtr& x, const NodePtr& w, const NodePtr& bias);

/// Picks entries (r, c) from a 2-D node into a Kx1 column.
NodePtr gather_pairs(const NodePtr& a, std::vector<std::pair<std::size_t, std::size_t>> idx);

/// Row `row` of each per-step matrix, stacked into steps x C.
NodePtr stack_entity_rows(const std::vector<NodePtr>& steps, std::size_t row);

/// Row `step` of each per-entity matrix, stacked into entities x C.
NodePtr gather_step_rows(const std::vector<NodePtr>& entities, std::size_t step);

/// Element-wise mean of same-shaped nodes.
NodePtr mean_of(const std::vector<NodePtr>& parts);

}  // namespace hctn
