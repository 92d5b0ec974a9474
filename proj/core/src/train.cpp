#include "hctn/train.hpp"

#include <chrono>
#include <limits>

#include "hctn/errors.hpp"
#include "hctn/isolation_forest.hpp"
#include "hctn/optimizer.hpp"
#include "hctn/synth.hpp"

namespace hctn {

TrainOutcome train_model(const SparseQoSTensor& data, const TrainOptions& opts) {
  return train_model_on_split(make_split(data, opts.split), opts);
}

TrainOutcome train_model_on_split(SplitResult split, const TrainOptions& opts) {
  opts.hp.validate();
  if (split.window != opts.hp.window) {
    throw ConfigError("train: split window differs from model window");
  }

  if (opts.train_outlier_lambda > 0.0) {
    IsolationForestOptions ifo;
    ifo.seed = derive_seed(opts.hp.seed, 0x0F);
    std::vector<QoSRecord> records = split.train.all_records();
    OutlierReport rep = remove_outliers(records, opts.train_outlier_lambda, ifo);
    split.train = with_records(split.train, std::move(rep.kept));
  }

  const std::size_t target = split.target_time;
  ModelInputs inputs = prepare_inputs(split.train, target, opts.hp);
  auto train_set = split.train.slice(target).all();
  const std::vector<QoSRecord> psi(train_set.begin(), train_set.end());
  if (psi.empty()) throw DataError("train: no observed records at the target step");

  const std::size_t users = split.train.users();
  const std::size_t services = split.train.services();
  TrainOutcome out{HctnModel(users, services, opts.hp), std::move(inputs), std::move(split)};

  AdamW optimizer({opts.hp.lr, opts.hp.beta1, opts.hp.beta2, opts.hp.adam_eps,
                   opts.hp.weight_decay});

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= opts.hp.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;
    try {
      ForwardResult fwd =
          out.model.forward(out.inputs, /*train=*/true, derive_seed(opts.hp.seed, 7000 + epoch));
      NodePtr loss = opts.hp.loss == LossKind::Cauchy
                         ? cauchy_loss(fwd.qhat, psi, opts.hp.gamma)
                         : mse_loss(fwd.qhat, psi);
      entry.train_loss = loss->value[0];
      backward(loss);
      optimizer.step(out.model.params().all());
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    double stop_signal = entry.train_loss;
    if (!out.split.validation.empty()) {
      PredictionResult pred = out.model.predict(out.inputs);
      const Metrics v = evaluate(pred.qhat, out.split.validation);
      entry.val_mae = v.mae;
      entry.val_rmse = v.rmse;
      stop_signal = v.mae;
    }
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back(entry);

    if (stop_signal < best) {
      best = stop_signal;
      out.best_epoch = epoch;
      out.best_val_mae = entry.val_mae;
      out.best_state = out.model.to_checkpoint(out.inputs);
      for (const auto& [key, tensor] : optimizer.state()) {
        out.best_state.put("opt/" + key, tensor);
      }
      Tensor epoch_meta(std::vector<std::size_t>{2});
      epoch_meta[0] = static_cast<double>(epoch);
      epoch_meta[1] = static_cast<double>(optimizer.step_count());
      out.best_state.put("meta/epoch", std::move(epoch_meta));
      since_best = 0;
    } else if (++since_best >= opts.hp.patience) {
      break;
    }
  }

  if (!out.best_state.entries.empty()) out.model.load_state(out.best_state);
  return out;
}

}  // namespace hctn
