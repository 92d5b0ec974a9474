#include "hctn/model.hpp"

#include <cmath>

#include "hctn/errors.hpp"

namespace hctn {

void Hyperparams::validate() const {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (window % 4 != 0) {
    throw ConfigError("window (" + std::to_string(window) +
                      ") must be divisible by 4 for the temporal conv pooling");
  }
  if (f1 < 1 || f2 < 1 || f4 < 1) throw ConfigError("feature widths must be >= 1");
  if (f2 % 4 != 0) throw ConfigError("f2 (" + std::to_string(f2) + ") must be divisible by 4");
  if ((f2 / 4) % heads != 0) {
    throw ConfigError("heads (" + std::to_string(heads) + ") must divide f2/4 = " +
                      std::to_string(f2 / 4));
  }
  if (layers < 1) throw ConfigError("HCN layer count must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv kernel must be odd and >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (gamma <= 0.0) throw ConfigError("cauchy scale gamma must be > 0");
  if (c1 <= 0.0 || c2 <= 0.0) throw ConfigError("greysheep constants must be > 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

ModelInputs prepare_inputs(const SparseQoSTensor& tensor, std::size_t target_time,
                           const Hyperparams& hp, const LatentFeatures* precomputed) {
  ModelInputs in;
  in.users = tensor.users();
  in.services = tensor.services();
  in.window = hp.window;

  if (precomputed) {
    in.latent = *precomputed;
  } else {
    MaskedNmfOptions nmf;
    nmf.rank = hp.f1;
    nmf.max_iters = hp.nmf_iters;
    nmf.seed = derive_seed(hp.seed, 0x9A);
    in.latent = build_initial_embeddings(tensor, target_time, hp.window, nmf);
  }

  for (std::size_t i = 0; i < hp.window; ++i) {
    const std::size_t t = target_time - hp.window + i;
    in.snapshots.push_back(snapshot_nodes(build_snapshot(tensor, t)));
  }

  for (Tensor& feats : build_local_features(tensor, target_time, hp.window)) {
    in.local_feats.push_back(constant(std::move(feats), "local_stats"));
  }

  in.greysheep = detect_greysheep(tensor, target_time, hp.window, hp.c1, hp.c2);
  for (const Tensor& g : in.greysheep.indicator) {
    in.indicator.push_back(constant(g, "greysheep"));
    in.indicator_comp.push_back(constant(complement_indicator(g), "greysheep_comp"));
  }
  return in;
}

HctnModel::HctnModel(std::size_t users, std::size_t services, const Hyperparams& hp)
    : n_(users), m_(services), hp_(hp) {
  hp_.validate();
  Rng rng(derive_seed(hp_.seed, 0x1817));
  hcn_ = HcnParams(hp_.f1, hp_.f2, hp_.layers, params_, rng);
  gmm_dense_ = Dense(hp_.f2 + 14, hp_.f2, "gmm.dense", params_, rng);
  tgem_ = TgemParams(hp_.f2, hp_.window, hp_.heads, hp_.kernel, hp_.dropout, params_, rng);
  cqpm_bn_ = BatchNorm(hp_.f2, "cqpm.bn", params_);
  cqpm_hidden_ = Dense(hp_.f2, hp_.f2, "cqpm.hidden", params_, rng);
  cqpm_out_ = Dense(hp_.f2, hp_.f4, "cqpm.out", params_, rng);
}

std::vector<NodePtr> HctnModel::latent_nodes(const ModelInputs& inputs, bool user_side) {
  const auto& source = user_side ? inputs.latent.user : inputs.latent.service;
  auto& cache = user_side ? latent_params_user_ : latent_params_service_;
  std::vector<NodePtr> out;
  if (hp_.freeze_gpam) {
    for (const Tensor& t : source) out.push_back(constant(t, "latent"));
    return out;
  }
  if (cache.empty()) {
    for (std::size_t t = 0; t < source.size(); ++t) {
      const std::string name =
          std::string("gpam.") + (user_side ? "user" : "service") + ".t" + std::to_string(t);
      cache.push_back(params_.add(source[t], name));
    }
  }
  return cache;
}

ForwardResult HctnModel::forward(const ModelInputs& inputs, bool train,
                                 std::uint64_t dropout_seed) {
  if (inputs.window != hp_.window) throw ShapeError("forward: window mismatch");
  if (inputs.users != n_ || inputs.services != m_) {
    throw DataError("forward: tensor dims " + std::to_string(inputs.users) + "x" +
                    std::to_string(inputs.services) + " vs model " + std::to_string(n_) + "x" +
                    std::to_string(m_));
  }
  const std::size_t entities = n_ + m_;

  std::vector<NodePtr> xu = latent_nodes(inputs, true);
  std::vector<NodePtr> xs = latent_nodes(inputs, false);
  std::vector<NodePtr> x0;
  for (std::size_t t = 0; t < hp_.window; ++t) {
    if (hp_.freeze_gpam) {
      x0.push_back(constant(inputs.latent.combined[t], "latent0"));
    } else {
      x0.push_back(concat_rows({xu[t], xs[t]}));
    }
  }

  CollaborativeFeatures cf = hcfm_forward(inputs.snapshots, x0, xu, xs, hcn_);

  ForwardResult out;
  if (hp_.use_gmm) {
    for (std::size_t t = 0; t < hp_.window; ++t) {
      NodePtr y2 = concat_cols({cf.y1[t], inputs.local_feats[t]});
      NodePtr y3 = gmm_dense_.forward(y2);
      NodePtr z1 = inject_rows(inputs.indicator[t], y3);
      NodePtr z2 = inject_rows(inputs.indicator_comp[t], cf.y1[t]);
      out.z3.push_back(add(z1, z2));
    }
  } else {
    out.z3 = cf.y1;
  }

  out.x3 = tgem_forward(out.z3, tgem_, train, derive_seed(dropout_seed, 0x3E));

  std::vector<NodePtr> combined;
  for (std::size_t t = 0; t < hp_.window; ++t) combined.push_back(add(out.z3[t], out.x3[t]));
  NodePtr normed = cqpm_bn_.forward(concat_rows(combined), train);
  std::vector<NodePtr> steps;
  for (std::size_t t = 0; t < hp_.window; ++t) {
    steps.push_back(slice_rows(normed, t * entities, (t + 1) * entities));
  }
  NodePtr pooled = mean_of(steps);
  NodePtr hidden = relu(cqpm_hidden_.forward(pooled));
  NodePtr features = cqpm_out_.forward(hidden);
  NodePtr user_features = slice_rows(features, 0, n_);
  NodePtr service_features = slice_rows(features, n_, entities);
  out.qhat = matmul(user_features, transpose(service_features));
  return out;
}

PredictionResult HctnModel::predict(const ModelInputs& inputs) {
  ForwardResult fwd = forward(inputs, /*train=*/false, /*dropout_seed=*/0);
  return PredictionResult{fwd.qhat->value};
}

namespace {

std::vector<BatchNorm*> bn_sites(TgemParams& tgem, BatchNorm& cqpm_bn) {
  return {&tgem.bn_input, &tgem.bn_reduced, &tgem.bn_output, &cqpm_bn};
}

}  // namespace

Checkpoint HctnModel::to_checkpoint(const ModelInputs& inputs) const {
  Checkpoint ck;
  Tensor dims(std::vector<std::size_t>{10});
  dims[0] = static_cast<double>(n_);
  dims[1] = static_cast<double>(m_);
  dims[2] = static_cast<double>(hp_.window);
  dims[3] = static_cast<double>(hp_.f1);
  dims[4] = static_cast<double>(hp_.f2);
  dims[5] = static_cast<double>(hp_.f4);
  dims[6] = static_cast<double>(hp_.layers);
  dims[7] = static_cast<double>(hp_.heads);
  dims[8] = static_cast<double>(hp_.kernel);
  dims[9] = static_cast<double>(hp_.seed);
  ck.put("meta/dims", std::move(dims));
  Tensor scalars(std::vector<std::size_t>{9});
  scalars[0] = hp_.gamma;
  scalars[1] = hp_.c1;
  scalars[2] = hp_.c2;
  scalars[3] = hp_.dropout;
  scalars[4] = hp_.use_gmm ? 1.0 : 0.0;
  scalars[5] = hp_.freeze_gpam ? 1.0 : 0.0;
  scalars[6] = hp_.loss == LossKind::Cauchy ? 0.0 : 1.0;
  scalars[7] = hp_.weight_decay;
  scalars[8] = hp_.lr;
  ck.put("meta/scalars", std::move(scalars));

  for (const auto& p : params_.all()) ck.put("param/" + p->name, p->value);
  auto sites = bn_sites(const_cast<TgemParams&>(tgem_), const_cast<BatchNorm&>(cqpm_bn_));
  for (BatchNorm* bn : sites) {
    ck.put("state/" + bn->state_name + ".running_mean", bn->running_mean);
    ck.put("state/" + bn->state_name + ".running_var", bn->running_var);
  }
  for (std::size_t t = 0; t < inputs.latent.user.size(); ++t) {
    ck.put("latent/user/t" + std::to_string(t), inputs.latent.user[t]);
    ck.put("latent/service/t" + std::to_string(t), inputs.latent.service[t]);
  }
  return ck;
}

std::pair<HctnModel, LatentFeatures> HctnModel::from_checkpoint(const Checkpoint& ck) {
  const Tensor& dims = ck.require("meta/dims");
  const Tensor& scalars = ck.require("meta/scalars");
  Hyperparams hp;
  const auto n = static_cast<std::size_t>(dims[0]);
  const auto m = static_cast<std::size_t>(dims[1]);
  hp.window = static_cast<std::size_t>(dims[2]);
  hp.f1 = static_cast<std::size_t>(dims[3]);
  hp.f2 = static_cast<std::size_t>(dims[4]);
  hp.f4 = static_cast<std::size_t>(dims[5]);
  hp.layers = static_cast<std::size_t>(dims[6]);
  hp.heads = static_cast<std::size_t>(dims[7]);
  hp.kernel = static_cast<std::size_t>(dims[8]);
  hp.seed = static_cast<std::uint64_t>(dims[9]);
  hp.gamma = scalars[0];
  hp.c1 = scalars[1];
  hp.c2 = scalars[2];
  hp.dropout = scalars[3];
  hp.use_gmm = scalars[4] != 0.0;
  hp.freeze_gpam = scalars[5] != 0.0;
  hp.loss = scalars[6] == 0.0 ? LossKind::Cauchy : LossKind::Mse;
  hp.weight_decay = scalars[7];
  if (scalars.size() > 8) hp.lr = scalars[8];

  HctnModel model(n, m, hp);
  model.load_state(ck);

  LatentFeatures latent;
  latent.rank = hp.f1;
  for (std::size_t t = 0; t < hp.window; ++t) {
    const Tensor& u = ck.require("latent/user/t" + std::to_string(t));
    const Tensor& s = ck.require("latent/service/t" + std::to_string(t));
    Tensor combined(n + m, hp.f1);
    std::copy(u.data().begin(), u.data().end(), combined.raw());
    std::copy(s.data().begin(), s.data().end(), combined.raw() + n * hp.f1);
    latent.user.push_back(u);
    latent.service.push_back(s);
    latent.combined.push_back(std::move(combined));
  }
  return {std::move(model), std::move(latent)};
}

void HctnModel::load_state(const Checkpoint& ck) {
  for (const auto& p : params_.all()) {
    const Tensor* t = ck.find("param/" + p->name);
    if (!t) {
      // unfrozen GPAM parameters appear on first forward, not at load time
      if (p->name.rfind("gpam.", 0) == 0) continue;
      throw DataError("checkpoint missing parameter '" + p->name + "'");
    }
    if (!t->same_shape(p->value)) {
      throw DataError("checkpoint shape mismatch for '" + p->name + "': " + t->shape_str() +
                      " vs " + p->value.shape_str());
    }
    p->value = *t;
  }
  for (BatchNorm* bn : bn_sites(tgem_, cqpm_bn_)) {
    bn->running_mean = ck.require("state/" + bn->state_name + ".running_mean");
    bn->running_var = ck.require("state/" + bn->state_name + ".running_var");
  }
}

namespace {

NodePtr residuals(const NodePtr& qhat, const std::vector<QoSRecord>& records) {
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  Tensor truth(records.size(), 1);
  idx.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    idx.emplace_back(records[i].user, records[i].service);
    truth.at(i, 0) = records[i].value;
  }
  return sub(gather_pairs(qhat, std::move(idx)), constant(std::move(truth), "truth"));
}

}  // namespace

NodePtr cauchy_loss(const NodePtr& qhat, const std::vector<QoSRecord>& records, double gamma) {
  if (records.empty()) throw DataError("cauchy_loss: empty record set");
  if (gamma <= 0.0) throw ConfigError("cauchy_loss: gamma must be > 0");
  NodePtr r = scale(residuals(qhat, records), 1.0 / gamma);
  return mean_all(log1p_op(square(r)));
}

NodePtr mse_loss(const NodePtr& qhat, const std::vector<QoSRecord>& records) {
  if (records.empty()) throw DataError("mse_loss: empty record set");
  return mean_all(square(residuals(qhat, records)));
}

}  // namespace hctn
