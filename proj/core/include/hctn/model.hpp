#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hctn/autograd.hpp"
#include "hctn/checkpoint.hpp"
#include "hctn/gmm.hpp"
#include "hctn/gpam.hpp"
#include "hctn/hcfm.hpp"
#include "hctn/nn.hpp"
#include "hctn/qos_data.hpp"
#include "hctn/tgem.hpp"

namespace hctn {

enum class LossKind { Cauchy, Mse };

struct Hyperparams {
  std::size_t window = 8;      // tau
  std::size_t f1 = 16;         // factorization rank
  std::size_t f2 = 128;        // collaborative feature width
  std::size_t f4 = 64;         // prediction head width
  std::size_t layers = 2;      // HCN depth l
  std::size_t heads = 4;       // attention heads h_n, head width f2/4/heads
  std::size_t kernel = 3;      // T-block conv kernel
  double dropout = 0.1;
  double gamma = 1.0;          // Cauchy scale
  double c1 = 1.0, c2 = 1.0;   // greysheep thresholds
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double weight_decay = 1e-4;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t nmf_iters = 100;
  std::uint64_t seed = 42;
  bool use_gmm = true;
  bool freeze_gpam = true;
  LossKind loss = LossKind::Cauchy;

  /// Divisibility and range checks; throws ConfigError with the violated
  /// constraint.
  void validate() const;
};

/// Frozen per-window inputs of one forward pass: factor embeddings, graph
/// constants, profile statistics and greysheep indicators.
struct ModelInputs {
  std::size_t users = 0, services = 0, window = 0;
  LatentFeatures latent;
  std::vector<SnapshotNodes> snapshots;
  std::vector<NodePtr> local_feats;     // window of N x 14
  std::vector<NodePtr> indicator;       // window of N x 1 (G)
  std::vector<NodePtr> indicator_comp;  // window of N x 1 (1 - G)
  GreysheepReport greysheep;
};

/// Builds every data-derived input from a training tensor. A precomputed
/// latent feature set (e.g. from a checkpoint) skips the factorizations and
/// keeps prediction well-defined for windows with empty slices.
ModelInputs prepare_inputs(const SparseQoSTensor& tensor, std::size_t target_time,
                           const Hyperparams& hp, const LatentFeatures* precomputed = nullptr);

struct ForwardResult {
  NodePtr qhat;              // n x m predictions at the target step
  std::vector<NodePtr> z3;   // GMM outputs per step
  std::vector<NodePtr> x3;   // TGEM outputs per step
};

/// Dense n x m prediction matrix with O(1) per-pair lookup.
struct PredictionResult {
  Tensor qhat;
  double at(std::size_t user, std::size_t service) const { return qhat.at(user, service); }
};

class HctnModel {
 public:
  HctnModel(std::size_t users, std::size_t services, const Hyperparams& hp);

  /// Assembles the full HCFM -> GMM -> TGEM -> CQPM graph. Latent features
  /// enter as constants when hp.freeze_gpam, else as registered parameters.
  ForwardResult forward(const ModelInputs& inputs, bool train, std::uint64_t dropout_seed);

  PredictionResult predict(const ModelInputs& inputs);

  const Hyperparams& hyperparams() const { return hp_; }
  std::size_t users() const { return n_; }
  std::size_t services() const { return m_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  /// Parameters, batch-norm running statistics and shape metadata.
  Checkpoint to_checkpoint(const ModelInputs& inputs) const;
  /// Rebuilds the model and its frozen latent features from a checkpoint;
  /// throws DataError on dimension mismatch against the tensor.
  static std::pair<HctnModel, LatentFeatures> from_checkpoint(const Checkpoint& ck);

  /// Restores parameter values + BN statistics from a snapshot of the same
  /// architecture.
  void load_state(const Checkpoint& ck);

 private:
  friend struct ModelStateAccess;
  std::size_t n_ = 0, m_ = 0;
  Hyperparams hp_;
  ParamRegistry params_;
  HcnParams hcn_;
  Dense gmm_dense_;  // (f2 + 14) -> f2
  TgemParams tgem_;
  BatchNorm cqpm_bn_;
  Dense cqpm_hidden_, cqpm_out_;  // f2 -> f2 (ReLU) -> f4
  std::vector<NodePtr> latent_params_user_, latent_params_service_;  // when unfrozen

  std::vector<NodePtr> latent_nodes(const ModelInputs& inputs, bool user_side);
};

/// Cauchy loss (1/|set|) sum log(1 + ((q - qhat)/gamma)^2) over the records.
NodePtr cauchy_loss(const NodePtr& qhat, const std::vector<QoSRecord>& records, double gamma);
NodePtr mse_loss(const NodePtr& qhat, const std::vector<QoSRecord>& records);

}  // namespace hctn
