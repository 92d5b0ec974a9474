#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hctn/autograd.hpp"

namespace hctn {

/// Adam with decoupled weight decay: the decay term acts directly on the
/// parameter and never flows through the moment estimates.
class AdamW {
 public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
  };

  AdamW() = default;
  explicit AdamW(const Config& cfg) : cfg_(cfg) {}

  const Config& config() const { return cfg_; }
  std::size_t step_count() const { return step_; }

  /// Applies one update to every parameter from its accumulated gradient,
  /// then clears the gradients. Params without gradients are decayed only.
  void step(const std::vector<NodePtr>& params);

  /// Moment tensors for checkpointing, keyed "<param>.m" / "<param>.v".
  std::unordered_map<std::string, Tensor> state() const;
  void load_state(const std::unordered_map<std::string, Tensor>& state, std::size_t step_count);

 private:
  struct Moments {
    Tensor m, v;
  };
  Config cfg_;
  std::unordered_map<std::string, Moments> moments_;
  std::size_t step_ = 0;
};

}  // namespace hctn
