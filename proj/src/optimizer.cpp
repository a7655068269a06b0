#include "mvs/optimizer.hpp"

#include <cmath>

namespace mvs::ad {

void AdamW::step(ParamStore& ps,
                 const std::function<double(const std::string&)>& lr_of) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (Parameter* p : ps.all()) {
    auto it = state_.find(p->name);
    if (it == state_.end()) {
      State s;
      s.m = Tensor(p->value.shape());
      s.v = Tensor(p->value.shape());
      it = state_.emplace(p->name, std::move(s)).first;
    }
    State& s = it->second;
    const double lr = lr_of(p->name);
    for (long i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      p->value[i] -=
          lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p->value[i]);
    }
  }
}

}  // namespace mvs::ad
