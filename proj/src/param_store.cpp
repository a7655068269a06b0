#include "mvs/param_store.hpp"

#include <cmath>
#include <stdexcept>

#include "mvs/rng.hpp"

namespace mvs::ad {

Parameter& ParamStore::create(const std::string& name, std::vector<int> shape,
                              Init init, int fan_in) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    if (it->second->value.shape() != shape)
      throw std::invalid_argument("ParamStore: shape conflict for '" + name + "'");
    return *it->second;
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      for (long i = 0; i < p->value.size(); ++i) p->value[i] = 1.0;
      break;
    case Init::kFanInUniform: {
      if (fan_in < 0) {
        if (shape.size() == 4)
          fan_in = shape[1] * shape[2] * shape[3];
        else if (!shape.empty())
          fan_in = shape[0];
        else
          fan_in = 1;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
      Rng rng = Rng::stream(seed_, name);
      for (long i = 0; i < p->value.size(); ++i)
        p->value[i] = rng.uniform(-bound, bound);
      break;
    }
  }
  Parameter& ref = *p;
  params_.emplace(name, std::move(p));
  return ref;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return *it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return *it->second;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_)
    for (long i = 0; i < p->grad.size(); ++i) p->grad[i] = 0.0;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

long ParamStore::total_elements() const {
  long n = 0;
  for (auto& [_, p] : params_) n += p->value.size();
  return n;
}

}  // namespace mvs::ad
