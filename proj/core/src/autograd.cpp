#include "hctn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hctn/errors.hpp"
#include "hctn/parallel.hpp"
#include "hctn/rng.hpp"

namespace hctn {

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor::zeros(value.shape());
  return grad;
}

void Node::accumulate(const Tensor& g) {
  Tensor& dst = ensure_grad();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void Node::zero_grad() {
  if (!grad.empty()) grad.zero();
}

NodePtr constant(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->name = std::move(name);
  return n;
}

NodePtr parameter(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backward_fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite result");
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return n;
}

void backward(const NodePtr& root) {
  if (root->value.size() != 1) {
    throw ShapeError("backward: root must be scalar, got " + root->value.shape_str());
  }
  // Iterative post-order DFS; reverse gives a topological order in which a
  // node is expanded only after every consumer contributed to its gradient.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

namespace {

void require_2d(const NodePtr& a, const char* op) {
  if (a->value.ndim() != 2) {
    throw ShapeError(std::string(op) + ": expected 2-D operand, got " + a->value.shape_str());
  }
}

void matmul_kernel(const Tensor& a, const Tensor& b, Tensor& out, bool transpose_a,
                   bool transpose_b) {
  const std::size_t n = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t m = transpose_b ? b.rows() : b.cols();
  parallel_for_chunks(n, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* orow = out.raw() + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = transpose_a ? a.at(p, i) : a.at(i, p);
        if (av == 0.0) continue;
        if (transpose_b) {
          for (std::size_t j = 0; j < m; ++j) orow[j] += av * b.at(j, p);
        } else {
          const double* brow = b.raw() + p * m;
          for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
      }
    }
  });
}

Tensor matmul_values(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false) {
  const std::size_t n = ta ? a.cols() : a.rows();
  const std::size_t m = tb ? b.rows() : b.cols();
  Tensor out(n, m);
  matmul_kernel(a, b, out, ta, tb);
  return out;
}

/// Unary element-wise op: fwd(x) and dfdx given (x, y).
NodePtr elementwise(const char* op, const NodePtr& a, const std::function<double(double)>& fwd,
                    const std::function<double(double, double)>& dydx) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a->value[i]);
  NodePtr pa = a;
  return make_node(op, std::move(out), {a}, [pa, dydx](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * dydx(pa->value[i], self.value[i]);
    }
  });
}

}  // namespace

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a->value.cols() != b->value.rows()) {
    throw ShapeError("matmul: inner dims differ, " + a->value.shape_str() + " x " +
                     b->value.shape_str());
  }
  Tensor out = matmul_values(a->value, b->value);
  NodePtr pa = a, pb = b;
  return make_node("matmul", std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      // dA = G . B^T
      Tensor& ga = pa->ensure_grad();
      matmul_kernel(self.grad, pb->value, ga, false, true);
    }
    if (pb->requires_grad) {
      // dB = A^T . G
      Tensor& gb = pb->ensure_grad();
      matmul_kernel(pa->value, self.grad, gb, true, false);
    }
  });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  NodePtr pa = a, pb = b;
  return make_node("add", std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) pb->accumulate(self.grad);
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] - b->value[i];
  NodePtr pa = a, pb = b;
  return make_node("sub", std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) {
      Tensor& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

NodePtr hadamard(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "hadamard");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
  NodePtr pa = a, pb = b;
  return make_node("hadamard", std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      Tensor& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

NodePtr scale(const NodePtr& a, double c) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * c;
  NodePtr pa = a;
  return make_node("scale", std::move(out), {a}, [pa, c](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
  });
}

NodePtr add_scalar(const NodePtr& a, double c) {
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + c;
  NodePtr pa = a;
  return make_node("add_scalar", std::move(out), {a}, [pa](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
  });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& row) {
  require_2d(a, "add_rowvec");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  if (row->value.size() != c) {
    throw ShapeError("add_rowvec: row size " + row->value.shape_str() + " vs matrix " +
                     a->value.shape_str());
  }
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = a->value.at(i, j) + row->value[j];
  }
  NodePtr pa = a, pr = row;
  return make_node("add_rowvec", std::move(out), {a, row}, [pa, pr, r, c](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pr->requires_grad) {
      Tensor& g = pr->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad.at(i, j);
      }
    }
  });
}

NodePtr scale_rows(const NodePtr& a, const NodePtr& col) {
  require_2d(a, "scale_rows");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  if (col->value.size() != r) {
    throw ShapeError("scale_rows: column size " + col->value.shape_str() + " vs matrix " +
                     a->value.shape_str());
  }
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const double s = col->value[i];
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = a->value.at(i, j) * s;
  }
  NodePtr pa = a, pc = col;
  return make_node("scale_rows", std::move(out), {a, col}, [pa, pc, r, c](Node& self) {
    if (pa->requires_grad) {
      Tensor& g = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        const double s = pc->value[i];
        for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i, j) * s;
      }
    }
    if (pc->requires_grad) {
      Tensor& g = pc->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += self.grad.at(i, j) * pa->value.at(i, j);
        g[i] += acc;
      }
    }
  });
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty part list");
  const std::size_t c = parts[0]->value.cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_rows");
    if (p->value.cols() != c) throw ShapeError("concat_rows: column counts differ");
    rows += p->value.rows();
  }
  Tensor out(rows, c);
  std::size_t r = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data().begin(), p->value.data().end(), out.raw() + r * c);
    r += p->value.rows();
  }
  std::vector<NodePtr> parents = parts;
  return make_node("concat_rows", std::move(out), parents, [parents, c](Node& self) {
    std::size_t r = 0;
    for (const auto& p : parents) {
      const std::size_t pr = p->value.rows();
      if (p->requires_grad) {
        Tensor& g = p->ensure_grad();
        for (std::size_t i = 0; i < pr * c; ++i) g[i] += self.grad[r * c + i];
      }
      r += pr;
    }
  });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty part list");
  const std::size_t r = parts[0]->value.rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p->value.rows() != r) throw ShapeError("concat_cols: row counts differ");
    cols += p->value.cols();
  }
  Tensor out(r, cols);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p->value.cols();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < pc; ++j) out.at(i, c0 + j) = p->value.at(i, j);
    }
    c0 += pc;
  }
  std::vector<NodePtr> parents = parts;
  return make_node("concat_cols", std::move(out), parents, [parents, r](Node& self) {
    std::size_t c0 = 0;
    for (const auto& p : parents) {
      const std::size_t pc = p->value.cols();
      if (p->requires_grad) {
        Tensor& g = p->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < pc; ++j) g.at(i, j) += self.grad.at(i, c0 + j);
        }
      }
      c0 += pc;
    }
  });
}

NodePtr slice_rows(const NodePtr& a, std::size_t r0, std::size_t r1) {
  require_2d(a, "slice_rows");
  if (r0 >= r1 || r1 > a->value.rows()) {
    throw ShapeError("slice_rows: bad range [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") of " + a->value.shape_str());
  }
  const std::size_t c = a->value.cols();
  Tensor out(r1 - r0, c);
  std::copy(a->value.raw() + r0 * c, a->value.raw() + r1 * c, out.raw());
  NodePtr pa = a;
  return make_node("slice_rows", std::move(out), {a}, [pa, r0, c](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[r0 * c + i] += self.grad[i];
  });
}

NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1) {
  require_2d(a, "slice_cols");
  if (c0 >= c1 || c1 > a->value.cols()) {
    throw ShapeError("slice_cols: bad range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") of " + a->value.shape_str());
  }
  const std::size_t r = a->value.rows();
  Tensor out(r, c1 - c0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = a->value.at(i, j);
  }
  NodePtr pa = a;
  return make_node("slice_cols", std::move(out), {a}, [pa, c0, r](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    const std::size_t w = self.grad.cols();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < w; ++j) g.at(i, c0 + j) += self.grad.at(i, j);
    }
  });
}

NodePtr transpose(const NodePtr& a) {
  require_2d(a, "transpose");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  Tensor out(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = a->value.at(i, j);
  }
  NodePtr pa = a;
  return make_node("transpose", std::move(out), {a}, [pa, r, c](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(j, i);
    }
  });
}

NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape) {
  Tensor out(std::move(shape));
  if (out.size() != a->value.size()) {
    throw ShapeError("reshape: element count mismatch " + a->value.shape_str() + " -> " +
                     out.shape_str());
  }
  std::copy(a->value.data().begin(), a->value.data().end(), out.raw());
  NodePtr pa = a;
  return make_node("reshape", std::move(out), {a}, [pa](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

NodePtr relu(const NodePtr& a) {
  return elementwise(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

NodePtr sigmoid(const NodePtr& a) {
  return elementwise(
      "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

NodePtr tanh_op(const NodePtr& a) {
  return elementwise(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

NodePtr log_op(const NodePtr& a) {
  return elementwise(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

NodePtr log1p_op(const NodePtr& a) {
  return elementwise(
      "log1p", a, [](double x) { return std::log1p(x); },
      [](double x, double) { return 1.0 / (1.0 + x); });
}

NodePtr square(const NodePtr& a) {
  return elementwise(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

NodePtr softmax_rows(const NodePtr& a) {
  require_2d(a, "softmax_rows");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = a->value.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, a->value.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double e = std::exp(a->value.at(i, j) - mx);
      out.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  NodePtr pa = a;
  return make_node("softmax_rows", std::move(out), {a}, [pa, r, c](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad.at(i, j) * self.value.at(i, j);
      for (std::size_t j = 0; j < c; ++j) {
        g.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
      }
    }
  });
}

NodePtr sum_all(const NodePtr& a) {
  Tensor out(std::vector<std::size_t>{1});
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) acc += a->value[i];
  out[0] = acc;
  NodePtr pa = a;
  return make_node("sum_all", std::move(out), {a}, [pa](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

NodePtr mean_all(const NodePtr& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a->value.size()));
}

NodePtr sum_axis(const NodePtr& a, int axis) {
  require_2d(a, "sum_axis");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  if (axis == 0) {
    Tensor out(1, c);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out.at(0, j) += a->value.at(i, j);
    }
    NodePtr pa = a;
    return make_node("sum_axis0", std::move(out), {a}, [pa, r, c](Node& self) {
      if (!pa->requires_grad) return;
      Tensor& g = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(0, j);
      }
    });
  }
  if (axis == 1) {
    Tensor out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out.at(i, 0) += a->value.at(i, j);
    }
    NodePtr pa = a;
    return make_node("sum_axis1", std::move(out), {a}, [pa, r, c](Node& self) {
      if (!pa->requires_grad) return;
      Tensor& g = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i, 0);
      }
    });
  }
  throw ShapeError("sum_axis: axis must be 0 or 1");
}

NodePtr mean_axis(const NodePtr& a, int axis) {
  const double denom = axis == 0 ? static_cast<double>(a->value.rows())
                                 : static_cast<double>(a->value.cols());
  return scale(sum_axis(a, axis), 1.0 / denom);
}

NodePtr dropout(const NodePtr& a, double rate, std::uint64_t seed, bool train) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0,1)");
  if (!train || rate == 0.0) return a;
  Rng rng(seed);
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<Tensor>(a->value.shape());
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = uniform01(rng) < keep ? 1.0 / keep : 0.0;
    (*mask)[i] = m;
    out[i] = a->value[i] * m;
  }
  NodePtr pa = a;
  return make_node("dropout", std::move(out), {a}, [pa, mask](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
  });
}

NodePtr conv1d_same(const NodePtr& x, const NodePtr& w, const NodePtr& bias) {
  require_2d(x, "conv1d");
  if (w->value.ndim() != 3) throw ShapeError("conv1d: weights must be K x Cin x Cout");
  const std::size_t len = x->value.rows();
  const std::size_t cin = x->value.cols();
  const std::size_t k = w->value.shape()[0];
  const std::size_t cout = w->value.shape()[2];
  if (w->value.shape()[1] != cin) {
    throw ShapeError("conv1d: input channels " + std::to_string(cin) + " vs weights " +
                     w->value.shape_str());
  }
  if (bias->value.size() != cout) throw ShapeError("conv1d: bias size vs output channels");
  const std::size_t pad = (k - 1) / 2;

  Tensor out(len, cout);
  for (std::size_t p = 0; p < len; ++p) {
    for (std::size_t o = 0; o < cout; ++o) out.at(p, o) = bias->value[o];
    for (std::size_t t = 0; t < k; ++t) {
      const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + t) - static_cast<std::ptrdiff_t>(pad);
      if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) continue;
      for (std::size_t c = 0; c < cin; ++c) {
        const double xv = x->value.at(static_cast<std::size_t>(q), c);
        if (xv == 0.0) continue;
        for (std::size_t o = 0; o < cout; ++o) out.at(p, o) += xv * w->value.at(t, c, o);
      }
    }
  }
  NodePtr px = x, pw = w, pb = bias;
  return make_node("conv1d", std::move(out), {x, w, bias},
                   [px, pw, pb, len, cin, k, cout, pad](Node& self) {
                     if (pb->requires_grad) {
                       Tensor& g = pb->ensure_grad();
                       for (std::size_t p = 0; p < len; ++p) {
                         for (std::size_t o = 0; o < cout; ++o) g[o] += self.grad.at(p, o);
                       }
                     }
                     for (std::size_t p = 0; p < len; ++p) {
                       for (std::size_t t = 0; t < k; ++t) {
                         const std::ptrdiff_t q =
                             static_cast<std::ptrdiff_t>(p + t) - static_cast<std::ptrdiff_t>(pad);
                         if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) continue;
                         const auto uq = static_cast<std::size_t>(q);
                         for (std::size_t c = 0; c < cin; ++c) {
                           if (pw->requires_grad) {
                             Tensor& gw = pw->ensure_grad();
                             const double xv = px->value.at(uq, c);
                             for (std::size_t o = 0; o < cout; ++o) {
                               gw.at(t, c, o) += self.grad.at(p, o) * xv;
                             }
                           }
                           if (px->requires_grad) {
                             Tensor& gx = px->ensure_grad();
                             double acc = 0.0;
                             for (std::size_t o = 0; o < cout; ++o) {
                               acc += self.grad.at(p, o) * pw->value.at(t, c, o);
                             }
                             gx.at(uq, c) += acc;
                           }
                         }
                       }
                     }
                   });
}

NodePtr gather_pairs(const NodePtr& a, std::vector<std::pair<std::size_t, std::size_t>> idx) {
  require_2d(a, "gather_pairs");
  const std::size_t r = a->value.rows(), c = a->value.cols();
  Tensor out(idx.size(), 1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i].first >= r || idx[i].second >= c) {
      throw ShapeError("gather_pairs: index out of range");
    }
    out.at(i, 0) = a->value.at(idx[i].first, idx[i].second);
  }
  auto keep = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(std::move(idx));
  NodePtr pa = a;
  return make_node("gather_pairs", std::move(out), {a}, [pa, keep](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->ensure_grad();
    for (std::size_t i = 0; i < keep->size(); ++i) {
      g.at((*keep)[i].first, (*keep)[i].second) += self.grad.at(i, 0);
    }
  });
}

NodePtr stack_entity_rows(const std::vector<NodePtr>& steps, std::size_t row) {
  if (steps.empty()) throw ShapeError("stack_entity_rows: no steps");
  const std::size_t c = steps[0]->value.cols();
  Tensor out(steps.size(), c);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    require_2d(steps[t], "stack_entity_rows");
    if (steps[t]->value.cols() != c || row >= steps[t]->value.rows()) {
      throw ShapeError("stack_entity_rows: inconsistent step shapes");
    }
    for (std::size_t j = 0; j < c; ++j) out.at(t, j) = steps[t]->value.at(row, j);
  }
  std::vector<NodePtr> parents = steps;
  return make_node("stack_entity_rows", std::move(out), parents, [parents, row, c](Node& self) {
    for (std::size_t t = 0; t < parents.size(); ++t) {
      if (!parents[t]->requires_grad) continue;
      Tensor& g = parents[t]->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) g.at(row, j) += self.grad.at(t, j);
    }
  });
}

NodePtr gather_step_rows(const std::vector<NodePtr>& entities, std::size_t step) {
  if (entities.empty()) throw ShapeError("gather_step_rows: no entities");
  const std::size_t c = entities[0]->value.cols();
  Tensor out(entities.size(), c);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    require_2d(entities[i], "gather_step_rows");
    if (entities[i]->value.cols() != c || step >= entities[i]->value.rows()) {
      throw ShapeError("gather_step_rows: inconsistent entity shapes");
    }
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = entities[i]->value.at(step, j);
  }
  std::vector<NodePtr> parents = entities;
  return make_node("gather_step_rows", std::move(out), parents, [parents, step, c](Node& self) {
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (!parents[i]->requires_grad) continue;
      Tensor& g = parents[i]->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) g.at(step, j) += self.grad.at(i, j);
    }
  });
}

NodePtr mean_of(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw ShapeError("mean_of: empty part list");
  NodePtr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  return scale(acc, 1.0 / static_cast<double>(parts.size()));
}

}  // namespace hctn
