#include "mvs/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace mvs::nn {

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out,
                      bool bias) {
  Linear l;
  l.w = &ps.create(name + ".w", {in, out}, ad::Init::kFanInUniform);
  if (bias) l.b = &ps.create(name + ".b", {out}, ad::Init::kZeros);
  return l;
}

Var Linear::forward(Tape& t, Var x) const {
  Var wv = t.leaf_with_sink(w->value, &w->grad);
  Var bv = b ? t.leaf_with_sink(b->value, &b->grad) : Var{};
  return ad::linear(x, wv, bv);
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int dim) {
  LayerNorm ln;
  ln.gain = &ps.create(name + ".g", {dim}, ad::Init::kOnes);
  ln.bias = &ps.create(name + ".b", {dim}, ad::Init::kZeros);
  return ln;
}

Var LayerNorm::forward(Tape& t, Var x) const {
  return ad::layer_norm(x, t.leaf_with_sink(gain->value, &gain->grad),
                        t.leaf_with_sink(bias->value, &bias->grad));
}

Mlp Mlp::create(ParamStore& ps, const std::string& name, const std::vector<int>& widths,
                bool final_bias) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least two widths");
  Mlp m;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    m.layers.push_back(Linear::create(ps, name + ".fc" + std::to_string(i), widths[i],
                                      widths[i + 1], last ? final_bias : true));
  }
  return m;
}

Var Mlp::forward(Tape& t, Var x) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(t, x);
    if (i + 1 < layers.size()) x = ad::gelu(x);
  }
  return x;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& ps, const std::string& name,
                                              int dim, int heads) {
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("MultiHeadAttention: dim " + std::to_string(dim) +
                                " not divisible by heads " + std::to_string(heads));
  MultiHeadAttention a;
  a.heads = heads;
  a.q = Linear::create(ps, name + ".q", dim, dim);
  a.k = Linear::create(ps, name + ".k", dim, dim);
  a.v = Linear::create(ps, name + ".v", dim, dim);
  a.out = Linear::create(ps, name + ".o", dim, dim, /*bias=*/false);
  return a;
}

Var MultiHeadAttention::forward(Tape& t, Var x_q, Var x_kv,
                                const Tensor& key_mask) const {
  const Tensor& vq = t.val(x_q);
  const Tensor& vkv = t.val(x_kv);
  if (vq.rank() != 2 || vkv.rank() != 2 || vq.dim(1) != vkv.dim(1))
    throw std::invalid_argument("MultiHeadAttention: expected [n,D] inputs");
  const int n_q = vq.dim(0), n_k = vkv.dim(0), dim = vq.dim(1);
  const int dh = dim / heads;

  Tensor mask({n_q, n_k});
  if (key_mask.rank() == 1 && key_mask.dim(0) == n_k) {
    for (int i = 0; i < n_q; ++i)
      for (int j = 0; j < n_k; ++j) mask.at2(i, j) = key_mask[j];
  } else if (key_mask.rank() == 2 && key_mask.dim(0) == n_q && key_mask.dim(1) == n_k) {
    mask = key_mask;
  } else {
    throw std::invalid_argument("MultiHeadAttention: key_mask must be [n_k] or [n_q,n_k]");
  }

  Var qp = q.forward(t, x_q);
  Var kp = k.forward(t, x_kv);
  Var vp = v.forward(t, x_kv);

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> head_outs;
  head_outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = ad::narrow(qp, 1, h * dh, dh);
    Var kh = ad::narrow(kp, 1, h * dh, dh);
    Var vh = ad::narrow(vp, 1, h * dh, dh);
    Var scores = ad::scale(ad::matmul(qh, ad::transpose2(kh)), inv_sqrt);
    Var att = ad::masked_softmax(scores, mask);
    head_outs.push_back(ad::matmul(att, vh));
  }
  Var merged = heads == 1 ? head_outs[0] : ad::concat(head_outs, 1);
  return out.forward(t, merged);
}

Conv2d Conv2d::create(ParamStore& ps, const std::string& name, int in_c, int out_c,
                      int kernel, int stride, int pad, bool bias) {
  Conv2d c;
  c.w = &ps.create(name + ".w", {out_c, in_c, kernel, kernel}, ad::Init::kFanInUniform);
  if (bias) c.b = &ps.create(name + ".b", {out_c}, ad::Init::kZeros);
  c.stride = stride;
  c.pad = pad;
  return c;
}

Var Conv2d::forward(Tape& t, Var x) const {
  Var wv = t.leaf_with_sink(w->value, &w->grad);
  Var bv = b ? t.leaf_with_sink(b->value, &b->grad) : Var{};
  return ad::conv2d(x, wv, bv, stride, pad);
}

SelfAttentionBlock SelfAttentionBlock::create(ParamStore& ps, const std::string& name,
                                              int dim, int heads) {
  SelfAttentionBlock b;
  b.ln = LayerNorm::create(ps, name + ".ln", dim);
  b.mha = MultiHeadAttention::create(ps, name + ".mha", dim, heads);
  return b;
}

Var SelfAttentionBlock::forward(Tape& t, Var x, const Tensor& key_mask) const {
  Var xn = ln.forward(t, x);
  return ad::add(x, mha.forward(t, xn, xn, key_mask));
}

FeedForwardBlock FeedForwardBlock::create(ParamStore& ps, const std::string& name,
                                          int dim, int hidden) {
  FeedForwardBlock b;
  b.ln = LayerNorm::create(ps, name + ".ln", dim);
  b.fc1 = Linear::create(ps, name + ".fc1", dim, hidden);
  b.fc2 = Linear::create(ps, name + ".fc2", hidden, dim);
  return b;
}

Var FeedForwardBlock::forward(Tape& t, Var x) const {
  Var h = ad::gelu(fc1.forward(t, ln.forward(t, x)));
  return ad::add(x, fc2.forward(t, h));
}

Tensor sinusoidal_position_1d(int length, int dim) {
  Tensor e({length, dim});
  for (int p = 0; p < length; ++p)
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -2.0 * (i / 2) / dim);
      e.at2(p, i) = (i % 2 == 0) ? std::sin(p * freq) : std::cos(p * freq);
    }
  return e;
}

Tensor sinusoidal_position_2d(int rows, int cols, int dim) {
  // first half encodes the row, second half the column
  const int half = dim / 2;
  Tensor row_e = sinusoidal_position_1d(rows, half);
  Tensor col_e = sinusoidal_position_1d(cols, dim - half);
  Tensor e({rows * cols, dim});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double* dst = e.data() + static_cast<long>(r * cols + c) * dim;
      for (int i = 0; i < half; ++i) dst[i] = row_e.at2(r, i);
      for (int i = 0; i < dim - half; ++i) dst[half + i] = col_e.at2(c, i);
    }
  return e;
}

Tensor all_true_mask(const std::vector<int>& shape) { return Tensor::full(shape, 1.0); }

}  // namespace mvs::nn
