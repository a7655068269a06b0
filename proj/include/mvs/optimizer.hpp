#pragma once

#include <functional>
#include <map>
#include <string>

#include "mvs/param_store.hpp"

namespace mvs::ad {

// Adaptive moment estimation with decoupled weight decay.
class AdamW {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
  };

  AdamW() : AdamW(Config()) {}
  explicit AdamW(Config cfg) : cfg_(cfg) {}

  // One update over every parameter in the store; the learning rate is
  // resolved per parameter name (group schedules live in the caller).
  void step(ParamStore& ps, const std::function<double(const std::string&)>& lr_of);

  long step_count() const { return step_count_; }
  const Config& config() const { return cfg_; }

  // Moment access for checkpointing (bitwise-faithful resume).
  struct State {
    Tensor m, v;
  };
  const std::map<std::string, State>& state() const { return state_; }
  void restore(long step_count, std::map<std::string, State> state) {
    step_count_ = step_count;
    state_ = std::move(state);
  }

 private:
  Config cfg_;
  long step_count_ = 0;
  std::map<std::string, State> state_;
};

}  // namespace mvs::ad
