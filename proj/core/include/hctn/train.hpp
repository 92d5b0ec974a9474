#pragma once

#include <vector>

#include "hctn/metrics.hpp"
#include "hctn/model.hpp"
#include "hctn/qos_data.hpp"

namespace hctn {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  Hyperparams hp;
  SplitSpec split;
  /// Percent of training records stripped by the isolation forest before
  /// fitting; 0 trains on the split as-is.
  double train_outlier_lambda = 0.0;
};

struct TrainOutcome {
  HctnModel model;
  ModelInputs inputs;
  SplitResult split;
  std::vector<EpochLog> log;
  double best_val_mae = 0.0;
  std::size_t best_epoch = 0;
  Checkpoint best_state;
};

/// Full-batch training with per-epoch validation, best-checkpoint retention
/// and early stopping on the validation MAE (train loss when there is no
/// validation set). The returned model carries the best epoch's state.
TrainOutcome train_model(const SparseQoSTensor& data, const TrainOptions& opts);

/// Same loop on an already-materialized split; lets callers rewrite the
/// training records (outlier injection, ablations) before fitting.
TrainOutcome train_model_on_split(SplitResult split, const TrainOptions& opts);

}  // namespace hctn
