#include "hctn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "hctn/errors.hpp"

namespace hctn {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 3) {
    throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape_.size()));
  }
  data_.assign(product(shape_), 0.0);
}

Tensor::Tensor(std::size_t rows, std::size_t cols) : Tensor(std::vector<std::size_t>{rows, cols}) {}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("from_rows: empty row list");
  Tensor t(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ShapeError("from_rows: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.at(i, j) = rows[i][j];
  }
  return t;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::string s;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s.empty() ? "scalar" : s;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace hctn
