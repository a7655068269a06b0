#include "mvs/tape.hpp"

#include <stdexcept>

namespace mvs::ad {

void Tape::backward(Var output) {
  if (output.tape != this) throw std::invalid_argument("backward: foreign Var");
  const Tensor& out = val(output);
  if (out.size() != 1)
    throw std::invalid_argument("backward: output must be a scalar, got shape " +
                                Tensor::shape_str(out.shape()));
  grad_mut(output)[0] = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

}  // namespace mvs::ad
