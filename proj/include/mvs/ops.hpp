#pragma once

#include <utility>
#include <vector>

#include "mvs/tape.hpp"

namespace mvs::ad {

// Elementwise and linear-algebra kernels with exact reverse-mode backward
// passes. Shapes are checked strictly; a mismatch throws with both shapes in
// the message. Unless noted, gradients flow to every Var input.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var matmul(Var a, Var b);                 // [n,k] x [k,m] -> [n,m]
Var linear(Var x, Var w, Var b);          // x*w + b; pass invalid b to skip bias
Var add_bias(Var x, Var b);               // rank-1 broadcast over the last dim
Var transpose2(Var a);                    // [n,m] -> [m,n]
Var rowwise_dot(Var a, Var b);            // [n,c],[n,c] -> [n]

Var gelu(Var a);                          // exact erf form (smooth everywhere)
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);                           // throws std::domain_error on x <= 0
Var sqrt(Var a);
Var abs(Var a);                           // subgradient 0 at the kink

// Normalization over the last dimension; affine applied after.
// Pre-affine output has per-row mean 0 and unit variance (up to eps).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-12);

// Softmax over the last dimension with a {0,1} mask of the same shape.
// Masked entries get weight 0; rows with no valid entry return all zeros
// (documented sentinel, gradient zero). Stable via max-subtraction.
Var masked_softmax(Var logits, const Tensor& mask);
Var softmax(Var logits);

Var sum(Var a);                           // -> scalar
Var mean(Var a);                          // -> scalar
Var sum_weighted(Var a, const Tensor& w); // -> scalar, w constant

// Shape surgery. All copy; backward scatters.
Var reshape(Var a, std::vector<int> shape);
Var narrow(Var a, int axis, int start, int len);
Var concat(const std::vector<Var>& parts, int axis);

// --- spatial kernels (CHW layout) ---

// 2D convolution, zero padding. w is [out_c, in_c, kh, kw].
Var conv2d(Var x, Var w, Var b, int stride, int pad);

// 2x2 max-pool where invalid positions are excluded from the max; windows
// with no valid entry produce 0 with an invalid output mask. The mask is a
// constant (H x W, nonzero = valid); gradient routes to the argmax entries.
struct PooledPair {
  Var values;   // [C, H/2, W/2]
  Tensor mask;  // [H/2, W/2]
};
PooledPair masked_max_pool2x2(Var x, const Tensor& mask);

Var upsample_nearest(Var x, int factor);  // [C,H,W] -> [C,H*f,W*f]

// Area-average downsample of an H x W map restricted to valid pixels.
// Cells with no valid pixel output 0 with an invalid mask.
struct DownsampledPair {
  Var values;   // [H/f, W/f]
  Tensor mask;  // [H/f, W/f]
};
DownsampledPair masked_downsample_area(Var x, const Tensor& mask, int factor);

// Bilinear interpolation of a [C,H,W] grid at continuous pixel-center
// coordinates (x right, y down; pixel (i,j) has center (j+0.5, i+0.5)).
// Samples with any corner outside the grid are invalid and return 0.
// Gradients propagate to the grid only; coordinates are constants.
struct SampledPair {
  Var values;                  // [C, n]
  std::vector<uint8_t> valid;  // n
};
SampledPair bilinear_sample(Var grid, const std::vector<std::pair<double, double>>& coords);

namespace detail {
void check_same_tape(Var a, Var b, const char* op);
void check_same_shape(const Tensor& a, const Tensor& b, const char* op);
// outer/axis/inner decomposition used by narrow/concat
struct AxisSplit {
  long outer, mid, inner;
};
AxisSplit split_axis(const std::vector<int>& shape, int axis);
}  // namespace detail

}  // namespace mvs::ad
