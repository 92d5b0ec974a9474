#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hctn {

/// Dense row-major array of 64-bit reals, rank 1..3. Value semantics;
/// shapes are fixed at construction.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::size_t rows, std::size_t cols);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }

  void fill(double v);
  void zero() { fill(0.0); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  /// "rxc" / "axbxc" rendering for error messages.
  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Throws ShapeError naming both shapes when they differ.
void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace hctn
