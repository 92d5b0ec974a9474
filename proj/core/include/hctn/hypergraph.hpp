#pragma once

#include <string>
#include <utility>

#include "hctn/qos_data.hpp"
#include "hctn/tensor.hpp"

namespace hctn {

/// Per-time-step decomposition of the QoS invocation hypergraph into the
/// first-order user-service graph and the second-order user-user /
/// service-service graphs, with their normalized propagation matrices.
struct HypergraphSnapshot {
  std::size_t t = 0;
  std::size_t users = 0, services = 0;
  Tensor incidence;        // H: n x m binary
  Tensor adjacency;        // A: N x N binary, user block first
  Tensor user_adjacency;   // A_u: n x n binary, zero diagonal
  Tensor service_adjacency;  // A_s: m x m binary, zero diagonal
  Tensor adjacency_norm;   // A-hat: D~^{-1/2} (A+I) D~^{-1/2}
  Tensor user_norm;        // A_u-hat per the incidence-based derivation
  Tensor service_norm;     // A_s-hat
};

/// Symmetric renormalization with self-loops; degrees are taken from (A+I)
/// so isolated nodes keep a well-defined unit self-weight.
Tensor normalize_fig(const Tensor& adjacency);

/// A_u-hat = D_u^{-1/2} H D_s^{-1} H^T D_u^{-1/2} and the transposed form
/// for services. D_u/D_s are the degree diagonals of the second-order
/// graphs; zero degrees are clamped to 1 before inversion.
std::pair<Tensor, Tensor> normalize_second_order(const Tensor& incidence,
                                                 const Tensor& user_adjacency,
                                                 const Tensor& service_adjacency);

HypergraphSnapshot build_snapshot(const SparseQoSTensor& tensor, std::size_t t);

/// Writes A/H/A_u/A_s as "i j" coordinate-list text files under dir.
void dump_snapshot(const HypergraphSnapshot& snap, const std::string& dir);

}  // namespace hctn
