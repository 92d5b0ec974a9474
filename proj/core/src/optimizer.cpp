#include "hctn/optimizer.hpp"

#include <cmath>

#include "hctn/errors.hpp"

namespace hctn {

void AdamW::step(const std::vector<NodePtr>& params) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const auto& p : params) {
    auto& mo = moments_[p->name];
    if (mo.m.empty()) {
      mo.m = Tensor::zeros(p->value.shape());
      mo.v = Tensor::zeros(p->value.shape());
    }
    const bool has_grad = !p->grad.empty();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = has_grad ? p->grad[i] : 0.0;
      if (!std::isfinite(g)) {
        throw NumericError("adamw: non-finite gradient in " + p->name);
      }
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = mo.m[i] / bc1;
      const double vhat = mo.v[i] / bc2;
      p->value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                cfg_.weight_decay * p->value[i]);
    }
    p->zero_grad();
  }
}

std::unordered_map<std::string, Tensor> AdamW::state() const {
  std::unordered_map<std::string, Tensor> out;
  for (const auto& [name, mo] : moments_) {
    out[name + ".m"] = mo.m;
    out[name + ".v"] = mo.v;
  }
  return out;
}

void AdamW::load_state(const std::unordered_map<std::string, Tensor>& state,
                       std::size_t step_count) {
  moments_.clear();
  step_ = step_count;
  for (const auto& [key, t] : state) {
    if (key.size() < 2) continue;
    const std::string name = key.substr(0, key.size() - 2);
    if (key.ends_with(".m")) {
      moments_[name].m = t;
    } else if (key.ends_with(".v")) {
      moments_[name].v = t;
    }
  }
}

}  // namespace hctn
