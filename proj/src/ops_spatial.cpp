#include <cmath>
#include <memory>
#include <stdexcept>

#include "mvs/ops.hpp"

namespace mvs::ad {

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  detail::check_same_tape(x, w, "conv2d");
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  const Tensor& vw = t.val(w);
  if (vx.rank() != 3 || vw.rank() != 4 || vw.dim(1) != vx.dim(0))
    throw std::invalid_argument("conv2d: expected x[C,H,W], w[O,C,kh,kw], got " +
                                Tensor::shape_str(vx.shape()) + " and " +
                                Tensor::shape_str(vw.shape()));
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const int O = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: empty output");
  const bool has_bias = b.valid();
  bool rg = t.requires_grad(x) || t.requires_grad(w) ||
            (has_bias && t.requires_grad(b));
  Var y = t.node({O, Ho, Wo}, rg);
  {
    Tensor& vy = t.val_mut(y);
    const double* bias = has_bias ? t.val(b).data() : nullptr;
    for (int o = 0; o < O; ++o) {
      const double bo = bias ? bias[o] : 0.0;
      for (int io = 0; io < Ho; ++io)
        for (int jo = 0; jo < Wo; ++jo) {
          double acc = bo;
          const int i0 = io * stride - pad;
          const int j0 = jo * stride - pad;
          for (int c = 0; c < C; ++c) {
            const double* xc = vx.data() + static_cast<long>(c) * H * W;
            const double* wc = vw.data() + ((static_cast<long>(o) * C + c) * kh) * kw;
            for (int ki = 0; ki < kh; ++ki) {
              const int ii = i0 + ki;
              if (ii < 0 || ii >= H) continue;
              for (int kj = 0; kj < kw; ++kj) {
                const int jj = j0 + kj;
                if (jj < 0 || jj >= W) continue;
                acc += xc[static_cast<long>(ii) * W + jj] * wc[ki * kw + kj];
              }
            }
          }
          vy.at3(o, io, jo) = acc;
        }
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, iw = w.id, ib = has_bias ? b.id : -1, iy = y.id;
    bool gx = t.requires_grad(x), gw = t.requires_grad(w);
    bool gb = has_bias && t.requires_grad(b);
    t.record([tp, ix, iw, ib, iy, gx, gw, gb, C, H, W, O, Ho, Wo, kh, kw, stride,
              pad]() {
      const Tensor& vx = tp->val(Var{tp, ix});
      const Tensor& vw = tp->val(Var{tp, iw});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor* grx = gx ? &tp->grad_mut(Var{tp, ix}) : nullptr;
      Tensor* grw = gw ? &tp->grad_mut(Var{tp, iw}) : nullptr;
      Tensor* grb = gb ? &tp->grad_mut(Var{tp, ib}) : nullptr;
      for (int o = 0; o < O; ++o)
        for (int io = 0; io < Ho; ++io)
          for (int jo = 0; jo < Wo; ++jo) {
            const double g = gy.at3(o, io, jo);
            if (g == 0.0) continue;
            if (grb) (*grb)[o] += g;
            const int i0 = io * stride - pad;
            const int j0 = jo * stride - pad;
            for (int c = 0; c < C; ++c) {
              const double* xc = vx.data() + static_cast<long>(c) * H * W;
              const double* wc =
                  vw.data() + ((static_cast<long>(o) * C + c) * kh) * kw;
              double* gxc = grx ? grx->data() + static_cast<long>(c) * H * W : nullptr;
              double* gwc =
                  grw ? grw->data() + ((static_cast<long>(o) * C + c) * kh) * kw
                      : nullptr;
              for (int ki = 0; ki < kh; ++ki) {
                const int ii = i0 + ki;
                if (ii < 0 || ii >= H) continue;
                for (int kj = 0; kj < kw; ++kj) {
                  const int jj = j0 + kj;
                  if (jj < 0 || jj >= W) continue;
                  if (gxc) gxc[static_cast<long>(ii) * W + jj] += g * wc[ki * kw + kj];
                  if (gwc) gwc[ki * kw + kj] += g * xc[static_cast<long>(ii) * W + jj];
                }
              }
            }
          }
    });
  }
  return y;
}

PooledPair masked_max_pool2x2(Var x, const Tensor& mask) {
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  if (vx.rank() != 3) throw std::invalid_argument("masked_max_pool2x2: x must be CHW");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  if (H % 2 || W % 2)
    throw std::invalid_argument("masked_max_pool2x2: H and W must be even");
  if (mask.rank() != 2 || mask.dim(0) != H || mask.dim(1) != W)
    throw std::invalid_argument("masked_max_pool2x2: mask must be HxW");
  const int Ho = H / 2, Wo = W / 2;
  bool rg = t.requires_grad(x);
  Var y = t.node({C, Ho, Wo}, rg);
  Tensor mask_out({Ho, Wo});
  // argmax flat index per (c, out-pixel); -1 when the window is fully invalid
  auto arg = std::make_shared<std::vector<long>>(static_cast<size_t>(C) * Ho * Wo, -1);
  {
    Tensor& vy = t.val_mut(y);
    for (int io = 0; io < Ho; ++io)
      for (int jo = 0; jo < Wo; ++jo) {
        bool any = false;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            any = any || mask.at2(2 * io + di, 2 * jo + dj) != 0.0;
        mask_out.at2(io, jo) = any ? 1.0 : 0.0;
        for (int c = 0; c < C; ++c) {
          double best = 0.0;
          long best_idx = -1;
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const int ii = 2 * io + di, jj = 2 * jo + dj;
              if (mask.at2(ii, jj) == 0.0) continue;
              const double v = vx.at3(c, ii, jj);
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = (static_cast<long>(c) * H + ii) * W + jj;
              }
            }
          vy.at3(c, io, jo) = best_idx >= 0 ? best : 0.0;
          (*arg)[(static_cast<size_t>(c) * Ho + io) * Wo + jo] = best_idx;
        }
      }
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, iy = y.id;
    t.record([tp, ix, iy, arg]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gx = tp->grad_mut(Var{tp, ix});
      for (long i = 0; i < gy.size(); ++i) {
        const long src = (*arg)[i];
        if (src >= 0) gx[src] += gy[i];
      }
    });
  }
  return PooledPair{y, std::move(mask_out)};
}

Var upsample_nearest(Var x, int factor) {
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  if (vx.rank() != 3) throw std::invalid_argument("upsample_nearest: x must be CHW");
  if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const int Ho = H * factor, Wo = W * factor;
  bool rg = t.requires_grad(x);
  Var y = t.node({C, Ho, Wo}, rg);
  {
    Tensor& vy = t.val_mut(y);
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j)
          vy.at3(c, i, j) = vx.at3(c, i / factor, j / factor);
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, iy = y.id;
    t.record([tp, ix, iy, C, Ho, Wo, factor]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gx = tp->grad_mut(Var{tp, ix});
      for (int c = 0; c < C; ++c)
        for (int i = 0; i < Ho; ++i)
          for (int j = 0; j < Wo; ++j)
            gx.at3(c, i / factor, j / factor) += gy.at3(c, i, j);
    });
  }
  return y;
}

DownsampledPair masked_downsample_area(Var x, const Tensor& mask, int factor) {
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  if (vx.rank() != 2) throw std::invalid_argument("masked_downsample_area: x must be HxW");
  const int H = vx.dim(0), W = vx.dim(1);
  if (H % factor || W % factor)
    throw std::invalid_argument("masked_downsample_area: dims not divisible by factor");
  detail::check_same_shape(vx, mask, "masked_downsample_area");
  const int Ho = H / factor, Wo = W / factor;
  bool rg = t.requires_grad(x);
  Var y = t.node({Ho, Wo}, rg);
  Tensor mask_out({Ho, Wo});
  auto counts = std::make_shared<std::vector<int>>(static_cast<size_t>(Ho) * Wo, 0);
  {
    Tensor& vy = t.val_mut(y);
    for (int io = 0; io < Ho; ++io)
      for (int jo = 0; jo < Wo; ++jo) {
        double acc = 0.0;
        int n = 0;
        for (int di = 0; di < factor; ++di)
          for (int dj = 0; dj < factor; ++dj) {
            const int ii = io * factor + di, jj = jo * factor + dj;
            if (mask.at2(ii, jj) != 0.0) {
              acc += vx.at2(ii, jj);
              ++n;
            }
          }
        (*counts)[static_cast<size_t>(io) * Wo + jo] = n;
        vy.at2(io, jo) = n > 0 ? acc / n : 0.0;
        mask_out.at2(io, jo) = n > 0 ? 1.0 : 0.0;
      }
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, iy = y.id;
    auto mp = std::make_shared<Tensor>(mask);
    t.record([tp, ix, iy, mp, counts, Ho, Wo, factor]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gx = tp->grad_mut(Var{tp, ix});
      for (int io = 0; io < Ho; ++io)
        for (int jo = 0; jo < Wo; ++jo) {
          const int n = (*counts)[static_cast<size_t>(io) * Wo + jo];
          if (n == 0) continue;
          const double g = gy.at2(io, jo) / n;
          for (int di = 0; di < factor; ++di)
            for (int dj = 0; dj < factor; ++dj) {
              const int ii = io * factor + di, jj = jo * factor + dj;
              if (mp->at2(ii, jj) != 0.0) gx.at2(ii, jj) += g;
            }
        }
    });
  }
  return DownsampledPair{y, std::move(mask_out)};
}

SampledPair bilinear_sample(Var grid,
                            const std::vector<std::pair<double, double>>& coords) {
  Tape& t = *grid.tape;
  const Tensor& vg = t.val(grid);
  if (vg.rank() != 3) throw std::invalid_argument("bilinear_sample: grid must be CHW");
  const int C = vg.dim(0), H = vg.dim(1), W = vg.dim(2);
  const int n = static_cast<int>(coords.size());
  bool rg = t.requires_grad(grid);
  Var y = t.node({C, n}, rg);
  std::vector<uint8_t> valid(n, 0);
  // per-sample corner index and weights, reused by backward
  struct Corner {
    int x0, y0;
    double wx, wy;  // fractional weights toward x0+1 / y0+1
  };
  auto corners = std::make_shared<std::vector<Corner>>(n);
  {
    Tensor& vy = t.val_mut(y);
    for (int s = 0; s < n; ++s) {
      const double fx = coords[s].first - 0.5;
      const double fy = coords[s].second - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      (*corners)[s] = Corner{x0, y0, fx - x0, fy - y0};
      if (x0 < 0 || y0 < 0 || x0 + 1 >= W || y0 + 1 >= H) continue;
      valid[s] = 1;
      const double wx = fx - x0, wy = fy - y0;
      for (int c = 0; c < C; ++c) {
        const double* g = vg.data() + static_cast<long>(c) * H * W;
        const double v00 = g[static_cast<long>(y0) * W + x0];
        const double v01 = g[static_cast<long>(y0) * W + x0 + 1];
        const double v10 = g[static_cast<long>(y0 + 1) * W + x0];
        const double v11 = g[static_cast<long>(y0 + 1) * W + x0 + 1];
        vy.at2(c, s) = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                       wy * ((1 - wx) * v10 + wx * v11);
      }
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ig = grid.id, iy = y.id;
    auto vp = std::make_shared<std::vector<uint8_t>>(valid);
    t.record([tp, ig, iy, corners, vp, C, H, W, n]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gg = tp->grad_mut(Var{tp, ig});
      for (int s = 0; s < n; ++s) {
        if (!(*vp)[s]) continue;
        const auto& cr = (*corners)[s];
        for (int c = 0; c < C; ++c) {
          const double g = gy.at2(c, s);
          if (g == 0.0) continue;
          double* gp = gg.data() + static_cast<long>(c) * H * W;
          gp[static_cast<long>(cr.y0) * W + cr.x0] += g * (1 - cr.wy) * (1 - cr.wx);
          gp[static_cast<long>(cr.y0) * W + cr.x0 + 1] += g * (1 - cr.wy) * cr.wx;
          gp[static_cast<long>(cr.y0 + 1) * W + cr.x0] += g * cr.wy * (1 - cr.wx);
          gp[static_cast<long>(cr.y0 + 1) * W + cr.x0 + 1] += g * cr.wy * cr.wx;
        }
      }
    });
  }
  return SampledPair{y, std::move(valid)};
}

}  // namespace mvs::ad
