#include "mvs/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mvs/ops.hpp"
#include "mvs/rng.hpp"

namespace mvs::ad {

std::string GradCheckReport::summary() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s max_rel_err=%.3e tol=%.1e coords=%ld%s%s",
                pass ? "PASS" : "FAIL", max_rel_err, tolerance, coords_checked,
                worst.empty() ? "" : " worst=", worst.c_str());
  return buf;
}

namespace {

double eval_scalar(const GraphFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& in : inputs) leaves.push_back(tape.leaf(in, false));
  Var y = f(tape, leaves);
  return tape.val(y)[0];
}

}  // namespace

GradCheckReport grad_check(const GraphFn& f, const std::vector<Tensor>& inputs,
                           double tolerance, double fd_step,
                           long max_coords_per_input, uint64_t subset_seed) {
  GradCheckReport rep;
  rep.tolerance = tolerance;

  // Analytic gradients.
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& in : inputs) leaves.push_back(tape.leaf(in, true));
    Var y = f(tape, leaves);
    if (tape.val(y).size() != 1) {
      rep.finite = false;
      rep.worst = "graph output is not a scalar";
      return rep;
    }
    if (!std::isfinite(tape.val(y)[0])) {
      rep.finite = false;
      rep.worst = "non-finite forward value";
      return rep;
    }
    tape.backward(y);
    for (Var l : leaves) analytic.push_back(tape.grad(l));
  }

  std::vector<Tensor> work = inputs;
  for (size_t i = 0; i < work.size(); ++i) {
    const long n = work[i].size();
    std::vector<long> coords;
    if (max_coords_per_input < 0 || n <= max_coords_per_input) {
      coords.resize(n);
      for (long c = 0; c < n; ++c) coords[c] = c;
    } else {
      Rng rng(subset_seed ^ (0x9e37 * (i + 1)));
      coords.reserve(max_coords_per_input);
      for (long c = 0; c < max_coords_per_input; ++c)
        coords.push_back(static_cast<long>(rng.below(n)));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (long c : coords) {
      const double saved = work[i][c];
      work[i][c] = saved + fd_step;
      const double up = eval_scalar(f, work);
      work[i][c] = saved - fd_step;
      const double dn = eval_scalar(f, work);
      work[i][c] = saved;
      const double fd = (up - dn) / (2.0 * fd_step);
      const double an = analytic[i][c];
      if (!std::isfinite(fd) || !std::isfinite(an)) {
        rep.finite = false;
        rep.worst = "input " + std::to_string(i) + " coord " + std::to_string(c) +
                    " non-finite";
        return rep;
      }
      const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = "input " + std::to_string(i) + " coord " + std::to_string(c) +
                    " fd=" + std::to_string(fd) + " an=" + std::to_string(an);
      }
    }
  }
  rep.pass = rep.finite && rep.max_rel_err < tolerance;
  return rep;
}

Var random_projection(Tape& t, Var x, uint64_t seed) {
  const Tensor& v = t.val(x);
  Tensor w(v.shape());
  Rng rng(seed);
  for (long i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  return sum_weighted(x, w);
}

}  // namespace mvs::ad
