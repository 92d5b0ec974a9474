#pragma once

#include <cstdint>
#include <vector>

#include "hctn/qos_data.hpp"
#include "hctn/tensor.hpp"

namespace hctn {

struct MaskedNmfOptions {
  std::size_t rank = 16;     // f1
  std::size_t max_iters = 100;
  double rel_tol = 1e-6;     // early stop on relative objective improvement
  double eps_div = 1e-12;    // denominator stabilizer
  std::uint64_t seed = 42;
};

struct MaskedNmfResult {
  Tensor user_factors;     // n x f1, non-negative
  Tensor service_factors;  // m x f1, non-negative
  /// Masked mean squared error after initialization and after every
  /// multiplicative update, in order.
  std::vector<double> objective_history;
};

/// Mean squared reconstruction error of W.H^T over the observed entries only.
double masked_objective(const TimeSlice& slice, const Tensor& user_factors,
                        const Tensor& service_factors);

/// Lee-Seung multiplicative updates restricted to the observed mask.
/// Factors start at seeded uniform(0.1, 1.1); rows with no observations in
/// the slice are left at their initialization, so the output stays dense.
MaskedNmfResult masked_nmf(const TimeSlice& slice, std::size_t users, std::size_t services,
                           const MaskedNmfOptions& opts);

/// Per-step factor tensors for the prediction window; combined rows [0,n)
/// are the user factors and rows [n,n+m) the service factors.
struct LatentFeatures {
  std::size_t rank = 0;
  std::vector<Tensor> user;      // window of n x f1
  std::vector<Tensor> service;   // window of m x f1
  std::vector<Tensor> combined;  // window of (n+m) x f1
};

/// One masked factorization per step of [target_time - window, target_time).
LatentFeatures build_initial_embeddings(const SparseQoSTensor& tensor, std::size_t target_time,
                                        std::size_t window, const MaskedNmfOptions& opts);

/// Dense reconstruction W.H^T of a single slice; the factorization-only
/// predictor used as a comparison baseline.
Tensor nmf_baseline_predict(const SparseQoSTensor& tensor, std::size_t t,
                            const MaskedNmfOptions& opts);

}  // namespace hctn
