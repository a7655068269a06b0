#include "mvs/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace mvs::ad {

namespace detail {

void check_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape)
    throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                Tensor::shape_str(a.shape()) + " vs " +
                                Tensor::shape_str(b.shape()));
}

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    throw std::invalid_argument("axis out of range");
  AxisSplit s{1, shape[axis], 1};
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  for (int i = axis + 1; i < static_cast<int>(shape.size()); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail

using detail::check_same_shape;
using detail::check_same_tape;

namespace {

// Elementwise binary op with per-element partials.
template <class Fwd, class Bwd>
Var binary_ew(Var a, Var b, const char* name, Fwd fwd, Bwd bwd) {
  check_same_tape(a, b, name);
  Tape& t = *a.tape;
  check_same_shape(t.val(a), t.val(b), name);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var y = t.node(t.val(a).shape(), rg);
  {
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    Tensor& vy = t.val_mut(y);
    for (long i = 0; i < va.size(); ++i) vy[i] = fwd(va[i], vb[i]);
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, ib = b.id, iy = y.id;
    bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    t.record([tp, ia, ib, iy, ga, gb, bwd]() {
      const Tensor& va = tp->val(Var{tp, ia});
      const Tensor& vb = tp->val(Var{tp, ib});
      const Tensor& vy = tp->val(Var{tp, iy});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor* gra = ga ? &tp->grad_mut(Var{tp, ia}) : nullptr;
      Tensor* grb = gb ? &tp->grad_mut(Var{tp, ib}) : nullptr;
      for (long i = 0; i < va.size(); ++i) {
        auto [da, db] = bwd(va[i], vb[i], vy[i]);
        if (gra) (*gra)[i] += gy[i] * da;
        if (grb) (*grb)[i] += gy[i] * db;
      }
    });
  }
  return y;
}

template <class Fwd, class Bwd>
Var unary_ew(Var a, const char* name, Fwd fwd, Bwd bwd) {
  (void)name;
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a);
  Var y = t.node(t.val(a).shape(), rg);
  {
    const Tensor& va = t.val(a);
    Tensor& vy = t.val_mut(y);
    for (long i = 0; i < va.size(); ++i) vy[i] = fwd(va[i]);
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    t.record([tp, ia, iy, bwd]() {
      const Tensor& va = tp->val(Var{tp, ia});
      const Tensor& vy = tp->val(Var{tp, iy});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gra = tp->grad_mut(Var{tp, ia});
      for (long i = 0; i < va.size(); ++i) gra[i] += gy[i] * bwd(va[i], vy[i]);
    });
  }
  return y;
}

struct Pair {
  double first, second;
};

}  // namespace

Var add(Var a, Var b) {
  return binary_ew(a, b, "add", [](double x, double y) { return x + y; },
                   [](double, double, double) { return Pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
  return binary_ew(a, b, "sub", [](double x, double y) { return x - y; },
                   [](double, double, double) { return Pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
  return binary_ew(a, b, "mul", [](double x, double y) { return x * y; },
                   [](double x, double y, double) { return Pair{y, x}; });
}

Var div(Var a, Var b) {
  return binary_ew(a, b, "div", [](double x, double y) { return x / y; },
                   [](double x, double y, double) {
                     return Pair{1.0 / y, -x / (y * y)};
                   });
}

Var neg(Var a) {
  return unary_ew(a, "neg", [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Var scale(Var a, double s) {
  return unary_ew(a, "scale", [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary_ew(a, "add_scalar", [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Var gelu(Var a) {
  return unary_ew(
      a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); },
      [](double x, double) {
        double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
        double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        return cdf + x * pdf;
      });
}

Var sigmoid(Var a) {
  return unary_ew(a, "sigmoid",
                  [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary_ew(a, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log(Var a) {
  const Tensor& v = a.tape->val(a);
  for (long i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0)) throw std::domain_error("log: non-positive input");
  return unary_ew(a, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
  return unary_ew(a, "sqrt", [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Var abs(Var a) {
  return unary_ew(a, "abs", [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " +
                                Tensor::shape_str(va.shape()) + " x " +
                                Tensor::shape_str(vb.shape()));
  const int n = va.dim(0), k = va.dim(1), m = vb.dim(1);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var y = t.node({n, m}, rg);
  {
    Tensor& vy = t.val_mut(y);
    const double* A = va.data();
    const double* B = vb.data();
    double* Y = vy.data();
    for (int i = 0; i < n; ++i) {
      double* yrow = Y + static_cast<long>(i) * m;
      const double* arow = A + static_cast<long>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        const double s = arow[kk];
        if (s == 0.0) continue;
        const double* brow = B + static_cast<long>(kk) * m;
        for (int j = 0; j < m; ++j) yrow[j] += s * brow[j];
      }
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, ib = b.id, iy = y.id;
    bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    t.record([tp, ia, ib, iy, ga, gb, n, k, m]() {
      const double* A = tp->val(Var{tp, ia}).data();
      const double* B = tp->val(Var{tp, ib}).data();
      const double* GY = tp->grad(Var{tp, iy}).data();
      if (ga) {
        double* GA = tp->grad_mut(Var{tp, ia}).data();
        // dA = dY * B^T
        for (int i = 0; i < n; ++i) {
          const double* gyrow = GY + static_cast<long>(i) * m;
          double* garow = GA + static_cast<long>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const double* brow = B + static_cast<long>(kk) * m;
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += gyrow[j] * brow[j];
            garow[kk] += acc;
          }
        }
      }
      if (gb) {
        double* GB = tp->grad_mut(Var{tp, ib}).data();
        // dB = A^T * dY
        for (int i = 0; i < n; ++i) {
          const double* arow = A + static_cast<long>(i) * k;
          const double* gyrow = GY + static_cast<long>(i) * m;
          for (int kk = 0; kk < k; ++kk) {
            const double s = arow[kk];
            if (s == 0.0) continue;
            double* gbrow = GB + static_cast<long>(kk) * m;
            for (int j = 0; j < m; ++j) gbrow[j] += s * gyrow[j];
          }
        }
      }
    });
  }
  return y;
}

Var add_bias(Var x, Var b) {
  check_same_tape(x, b, "add_bias");
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  const Tensor& vb = t.val(b);
  if (vx.rank() < 1 || vb.rank() != 1 || vx.dim(vx.rank() - 1) != vb.dim(0))
    throw std::invalid_argument("add_bias: bias " + Tensor::shape_str(vb.shape()) +
                                " does not match " + Tensor::shape_str(vx.shape()));
  const long m = vb.dim(0);
  const long rows = vx.size() / m;
  bool rg = t.requires_grad(x) || t.requires_grad(b);
  Var y = t.node(vx.shape(), rg);
  {
    Tensor& vy = t.val_mut(y);
    for (long r = 0; r < rows; ++r)
      for (long j = 0; j < m; ++j) vy[r * m + j] = vx[r * m + j] + vb[j];
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, ib = b.id, iy = y.id;
    bool gx = t.requires_grad(x), gb = t.requires_grad(b);
    t.record([tp, ix, ib, iy, gx, gb, rows, m]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      if (gx) {
        Tensor& grx = tp->grad_mut(Var{tp, ix});
        for (long i = 0; i < gy.size(); ++i) grx[i] += gy[i];
      }
      if (gb) {
        Tensor& grb = tp->grad_mut(Var{tp, ib});
        for (long r = 0; r < rows; ++r)
          for (long j = 0; j < m; ++j) grb[j] += gy[r * m + j];
      }
    });
  }
  return y;
}

Var linear(Var x, Var w, Var b) {
  Var y = matmul(x, w);
  if (b.valid()) y = add_bias(y, b);
  return y;
}

Var transpose2(Var a) {
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  if (va.rank() != 2) throw std::invalid_argument("transpose2: rank-2 only");
  const int n = va.dim(0), m = va.dim(1);
  bool rg = t.requires_grad(a);
  Var y = t.node({m, n}, rg);
  {
    Tensor& vy = t.val_mut(y);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) vy.at2(j, i) = va.at2(i, j);
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    t.record([tp, ia, iy, n, m]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& ga = tp->grad_mut(Var{tp, ia});
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) ga.at2(i, j) += gy.at2(j, i);
    });
  }
  return y;
}

Var rowwise_dot(Var a, Var b) {
  check_same_tape(a, b, "rowwise_dot");
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  check_same_shape(va, vb, "rowwise_dot");
  if (va.rank() != 2) throw std::invalid_argument("rowwise_dot: rank-2 only");
  const int n = va.dim(0), c = va.dim(1);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var y = t.node({n}, rg);
  {
    Tensor& vy = t.val_mut(y);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) acc += va.at2(i, j) * vb.at2(i, j);
      vy[i] = acc;
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, ib = b.id, iy = y.id;
    bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    t.record([tp, ia, ib, iy, ga, gb, n, c]() {
      const Tensor& va = tp->val(Var{tp, ia});
      const Tensor& vb = tp->val(Var{tp, ib});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor* gra = ga ? &tp->grad_mut(Var{tp, ia}) : nullptr;
      Tensor* grb = gb ? &tp->grad_mut(Var{tp, ib}) : nullptr;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
          if (gra) (*gra).at2(i, j) += gy[i] * vb.at2(i, j);
          if (grb) (*grb).at2(i, j) += gy[i] * va.at2(i, j);
        }
    });
  }
  return y;
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  check_same_tape(x, gain, "layer_norm");
  check_same_tape(x, bias, "layer_norm");
  Tape& t = *x.tape;
  const Tensor& vx = t.val(x);
  const Tensor& vg = t.val(gain);
  const Tensor& vb = t.val(bias);
  if (vx.rank() < 1 || vg.rank() != 1 || vb.rank() != 1 ||
      vg.dim(0) != vx.dim(vx.rank() - 1) || vb.dim(0) != vg.dim(0))
    throw std::invalid_argument("layer_norm: affine params must match last dim");
  const long m = vg.dim(0);
  const long rows = vx.size() / m;
  bool rg = t.requires_grad(x) || t.requires_grad(gain) || t.requires_grad(bias);
  Var y = t.node(vx.shape(), rg);
  // istd saved per row for backward
  auto istds = std::make_shared<std::vector<double>>(rows);
  auto means = std::make_shared<std::vector<double>>(rows);
  {
    Tensor& vy = t.val_mut(y);
    for (long r = 0; r < rows; ++r) {
      const double* xr = vx.data() + r * m;
      double mu = 0.0;
      for (long j = 0; j < m; ++j) mu += xr[j];
      mu /= m;
      double var = 0.0;
      for (long j = 0; j < m; ++j) var += (xr[j] - mu) * (xr[j] - mu);
      var /= m;
      double istd = 1.0 / std::sqrt(var + eps);
      (*istds)[r] = istd;
      (*means)[r] = mu;
      double* yr = vy.data() + r * m;
      for (long j = 0; j < m; ++j) yr[j] = (xr[j] - mu) * istd * vg[j] + vb[j];
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ix = x.id, ig = gain.id, ib = bias.id, iy = y.id;
    bool gx = t.requires_grad(x), gg = t.requires_grad(gain), gb = t.requires_grad(bias);
    t.record([tp, ix, ig, ib, iy, gx, gg, gb, rows, m, istds, means]() {
      const Tensor& vx = tp->val(Var{tp, ix});
      const Tensor& vg = tp->val(Var{tp, ig});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor* grx = gx ? &tp->grad_mut(Var{tp, ix}) : nullptr;
      Tensor* grg = gg ? &tp->grad_mut(Var{tp, ig}) : nullptr;
      Tensor* grb = gb ? &tp->grad_mut(Var{tp, ib}) : nullptr;
      for (long r = 0; r < rows; ++r) {
        const double* xr = vx.data() + r * m;
        const double* gyr = gy.data() + r * m;
        const double mu = (*means)[r];
        const double istd = (*istds)[r];
        if (grg || grb) {
          for (long j = 0; j < m; ++j) {
            double xhat = (xr[j] - mu) * istd;
            if (grg) (*grg)[j] += gyr[j] * xhat;
            if (grb) (*grb)[j] += gyr[j];
          }
        }
        if (grx) {
          // dxhat = gy * g; dx = istd * (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (long j = 0; j < m; ++j) {
            double xhat = (xr[j] - mu) * istd;
            double dxhat = gyr[j] * vg[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
          }
          sum_dxhat /= m;
          sum_dxhat_xhat /= m;
          double* gxr = grx->data() + r * m;
          for (long j = 0; j < m; ++j) {
            double xhat = (xr[j] - mu) * istd;
            double dxhat = gyr[j] * vg[j];
            gxr[j] += istd * (dxhat - sum_dxhat - xhat * sum_dxhat_xhat);
          }
        }
      }
    });
  }
  return y;
}

Var masked_softmax(Var logits, const Tensor& mask) {
  Tape& t = *logits.tape;
  const Tensor& vx = t.val(logits);
  check_same_shape(vx, mask, "masked_softmax");
  const long m = vx.dim(vx.rank() - 1);
  const long rows = vx.size() / m;
  bool rg = t.requires_grad(logits);
  Var y = t.node(vx.shape(), rg);
  {
    Tensor& vy = t.val_mut(y);
    for (long r = 0; r < rows; ++r) {
      const double* xr = vx.data() + r * m;
      const double* mr = mask.data() + r * m;
      double* yr = vy.data() + r * m;
      double mx = -std::numeric_limits<double>::infinity();
      for (long j = 0; j < m; ++j)
        if (mr[j] != 0.0 && xr[j] > mx) mx = xr[j];
      if (!std::isfinite(mx)) {  // no valid entry: all-zero sentinel row
        for (long j = 0; j < m; ++j) yr[j] = 0.0;
        continue;
      }
      double s = 0.0;
      for (long j = 0; j < m; ++j) {
        yr[j] = mr[j] != 0.0 ? std::exp(xr[j] - mx) : 0.0;
        s += yr[j];
      }
      for (long j = 0; j < m; ++j) yr[j] /= s;
    }
  }
  if (rg) {
    Tape* tp = &t;
    int ix = logits.id, iy = y.id;
    t.record([tp, ix, iy, rows, m]() {
      const Tensor& vy = tp->val(Var{tp, iy});
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& gx = tp->grad_mut(Var{tp, ix});
      for (long r = 0; r < rows; ++r) {
        const double* yr = vy.data() + r * m;
        const double* gyr = gy.data() + r * m;
        double* gxr = gx.data() + r * m;
        double dot = 0.0;
        for (long j = 0; j < m; ++j) dot += gyr[j] * yr[j];
        for (long j = 0; j < m; ++j) gxr[j] += yr[j] * (gyr[j] - dot);
      }
    });
  }
  return y;
}

Var softmax(Var logits) {
  return masked_softmax(logits, Tensor::full(logits.tape->val(logits).shape(), 1.0));
}

Var sum(Var a) {
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  bool rg = t.requires_grad(a);
  Var y = t.node({1}, rg);
  {
    double acc = 0.0;
    for (long i = 0; i < va.size(); ++i) acc += va[i];
    t.val_mut(y)[0] = acc;
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    t.record([tp, ia, iy]() {
      const double g = tp->grad(Var{tp, iy})[0];
      Tensor& ga = tp->grad_mut(Var{tp, ia});
      for (long i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  }
  return y;
}

Var mean(Var a) {
  long n = a.tape->val(a).size();
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_weighted(Var a, const Tensor& w) {
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  check_same_shape(va, w, "sum_weighted");
  bool rg = t.requires_grad(a);
  Var y = t.node({1}, rg);
  {
    double acc = 0.0;
    for (long i = 0; i < va.size(); ++i) acc += va[i] * w[i];
    t.val_mut(y)[0] = acc;
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    auto wp = std::make_shared<Tensor>(w);
    t.record([tp, ia, iy, wp]() {
      const double g = tp->grad(Var{tp, iy})[0];
      Tensor& ga = tp->grad_mut(Var{tp, ia});
      for (long i = 0; i < ga.size(); ++i) ga[i] += g * (*wp)[i];
    });
  }
  return y;
}

Var reshape(Var a, std::vector<int> shape) {
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  if (Tensor::count(shape) != va.size())
    throw std::invalid_argument("reshape: element count mismatch");
  bool rg = t.requires_grad(a);
  Var y = t.node(shape, rg);
  t.val_mut(y).vec() = va.vec();
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    t.record([tp, ia, iy]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& ga = tp->grad_mut(Var{tp, ia});
      for (long i = 0; i < ga.size(); ++i) ga[i] += gy[i];
    });
  }
  return y;
}

Var narrow(Var a, int axis, int start, int len) {
  Tape& t = *a.tape;
  const Tensor& va = t.val(a);
  auto sp = detail::split_axis(va.shape(), axis);
  if (start < 0 || len <= 0 || start + len > sp.mid)
    throw std::invalid_argument("narrow: range out of bounds");
  std::vector<int> yshape = va.shape();
  yshape[axis] = len;
  bool rg = t.requires_grad(a);
  Var y = t.node(yshape, rg);
  {
    Tensor& vy = t.val_mut(y);
    for (long o = 0; o < sp.outer; ++o)
      for (long j = 0; j < len; ++j) {
        const double* src = va.data() + (o * sp.mid + start + j) * sp.inner;
        double* dst = vy.data() + (o * len + j) * sp.inner;
        for (long i = 0; i < sp.inner; ++i) dst[i] = src[i];
      }
  }
  if (rg) {
    Tape* tp = &t;
    int ia = a.id, iy = y.id;
    long outer = sp.outer, mid = sp.mid, inner = sp.inner;
    t.record([tp, ia, iy, outer, mid, inner, start, len]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      Tensor& ga = tp->grad_mut(Var{tp, ia});
      for (long o = 0; o < outer; ++o)
        for (long j = 0; j < len; ++j) {
          double* dst = ga.data() + (o * mid + start + j) * inner;
          const double* src = gy.data() + (o * len + j) * inner;
          for (long i = 0; i < inner; ++i) dst[i] += src[i];
        }
    });
  }
  return y;
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  Tape& t = *parts[0].tape;
  const Tensor& v0 = t.val(parts[0]);
  std::vector<int> yshape = v0.shape();
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    check_same_tape(parts[0], p, "concat");
    const Tensor& vp = t.val(p);
    if (vp.rank() != v0.rank())
      throw std::invalid_argument("concat: rank mismatch");
    for (int d = 0; d < v0.rank(); ++d)
      if (d != axis && vp.dim(d) != v0.dim(d))
        throw std::invalid_argument("concat: shape mismatch off-axis");
    total += vp.dim(axis);
    rg = rg || t.requires_grad(p);
  }
  yshape[axis] = total;
  Var y = t.node(yshape, rg);
  auto sp = detail::split_axis(yshape, axis);
  {
    Tensor& vy = t.val_mut(y);
    long off = 0;
    for (Var p : parts) {
      const Tensor& vp = t.val(p);
      long mid = vp.dim(axis);
      for (long o = 0; o < sp.outer; ++o)
        for (long j = 0; j < mid; ++j) {
          const double* src = vp.data() + (o * mid + j) * sp.inner;
          double* dst = vy.data() + (o * sp.mid + off + j) * sp.inner;
          for (long i = 0; i < sp.inner; ++i) dst[i] = src[i];
        }
      off += mid;
    }
  }
  if (rg) {
    Tape* tp = &t;
    int iy = y.id;
    std::vector<int> ids;
    std::vector<long> mids;
    std::vector<char> want;
    for (Var p : parts) {
      ids.push_back(p.id);
      mids.push_back(t.val(p).dim(axis));
      want.push_back(t.requires_grad(p) ? 1 : 0);
    }
    long outer = sp.outer, ymid = sp.mid, inner = sp.inner;
    t.record([tp, iy, ids, mids, want, outer, ymid, inner]() {
      const Tensor& gy = tp->grad(Var{tp, iy});
      long off = 0;
      for (size_t pi = 0; pi < ids.size(); ++pi) {
        long mid = mids[pi];
        if (want[pi]) {
          Tensor& gp = tp->grad_mut(Var{tp, ids[pi]});
          for (long o = 0; o < outer; ++o)
            for (long j = 0; j < mid; ++j) {
              double* dst = gp.data() + (o * mid + j) * inner;
              const double* src = gy.data() + (o * ymid + off + j) * inner;
              for (long i = 0; i < inner; ++i) dst[i] += src[i];
            }
        }
        off += mid;
      }
    });
  }
  return y;
}

}  // namespace mvs::ad
