#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mvs/tape.hpp"
#include "mvs/tensor.hpp"

namespace mvs::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

enum class Init { kFanInUniform, kZeros, kOnes };

// Named learnable tensors with deterministic seeded initialization:
// weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a per-name RNG
// stream, biases zeros. Identical (seed, name, shape, init) yields bitwise
// identical values regardless of creation order.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}

  // Creates the parameter, or returns the existing one if shapes agree.
  // fan_in < 0 derives it from the shape: shape[0] for matrices, all
  // non-leading extents (in_c*kh*kw) for rank-4 conv kernels.
  Parameter& create(const std::string& name, std::vector<int> shape, Init init,
                    int fan_in = -1);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad();

  // Name-sorted; map iteration order makes updates deterministic.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;

  uint64_t seed() const { return seed_; }
  size_t size() const { return params_.size(); }
  long total_elements() const;

  // Place a parameter on a tape as a grad-tracked leaf; its gradient is
  // accumulated into Parameter::grad by backward().
  Var use(Tape& tape, Parameter& p) const { return tape.leaf_with_sink(p.value, &p.grad); }

 private:
  uint64_t seed_;
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

}  // namespace mvs::ad
