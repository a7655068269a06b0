#pragma once

#include <string>
#include <vector>

#include "mvs/ops.hpp"
#include "mvs/param_store.hpp"

namespace mvs::nn {

using ad::ParamStore;
using ad::Parameter;
using ad::Tape;
using ad::Var;

// Thin layer wrappers that own nothing: parameters live in the ParamStore
// under the layer's name prefix, so checkpoints are flat name->tensor maps.

struct Linear {
  Parameter* w = nullptr;
  Parameter* b = nullptr;  // null when bias-free

  static Linear create(ParamStore& ps, const std::string& name, int in, int out,
                       bool bias = true);
  Var forward(Tape& t, Var x) const;
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  static LayerNorm create(ParamStore& ps, const std::string& name, int dim);
  Var forward(Tape& t, Var x) const;
};

// Linear stack with GELU between layers (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(ParamStore& ps, const std::string& name,
                    const std::vector<int>& widths, bool final_bias = true);
  Var forward(Tape& t, Var x) const;
};

// Scaled dot-product multi-head attention with an explicit key mask.
// The output projection is bias-free so that a query row whose keys are all
// masked contributes an exact zero vector (masked_softmax sentinel).
struct MultiHeadAttention {
  int heads = 1;
  Linear q, k, v, out;

  // Throws std::invalid_argument when dim is not divisible by heads.
  static MultiHeadAttention create(ParamStore& ps, const std::string& name, int dim,
                                   int heads);

  // key_mask: {0,1} tensor, either [n_k] (shared by all queries) or
  // [n_q, n_k] (per-query restriction).
  Var forward(Tape& t, Var x_q, Var x_kv, const Tensor& key_mask) const;
};

struct Conv2d {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  int stride = 1;
  int pad = 0;

  static Conv2d create(ParamStore& ps, const std::string& name, int in_c, int out_c,
                       int kernel, int stride, int pad, bool bias = true);
  Var forward(Tape& t, Var x) const;
};

// Pre-norm residual self-attention: x + MHA(LN(x)) with a key mask.
struct SelfAttentionBlock {
  LayerNorm ln;
  MultiHeadAttention mha;

  static SelfAttentionBlock create(ParamStore& ps, const std::string& name, int dim,
                                   int heads);
  Var forward(Tape& t, Var x, const Tensor& key_mask) const;
};

// Pre-norm residual feed-forward: x + W2(gelu(W1(LN(x)))).
struct FeedForwardBlock {
  LayerNorm ln;
  Linear fc1, fc2;

  static FeedForwardBlock create(ParamStore& ps, const std::string& name, int dim,
                                 int hidden);
  Var forward(Tape& t, Var x) const;
};

// Sinusoidal embeddings (constants, not learned).
Tensor sinusoidal_position_1d(int length, int dim);          // [length, dim]
Tensor sinusoidal_position_2d(int rows, int cols, int dim);  // [rows*cols, dim]

Tensor all_true_mask(const std::vector<int>& shape);

}  // namespace mvs::nn
