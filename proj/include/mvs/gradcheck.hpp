#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mvs/tape.hpp"

namespace mvs::ad {

struct GradCheckReport {
  bool pass = false;
  bool finite = true;  // false when any value/gradient was non-finite
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  long coords_checked = 0;
  std::string worst;  // location of the worst coordinate

  std::string summary() const;
};

// Builds a scalar-valued graph from leaf inputs. The same function is used
// for the analytic pass and for every finite-difference re-evaluation, so it
// must be deterministic.
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central finite-difference verification of reverse-mode gradients:
// max relative error over checked coordinates, where
//   rel_err = |g_fd - g_an| / max(1, |g_fd|, |g_an|).
// max_coords_per_input < 0 checks every coordinate; otherwise a seeded
// random subset of that size per input (composed blocks are too large to
// perturb exhaustively inside the runtime budget).
GradCheckReport grad_check(const GraphFn& f, const std::vector<Tensor>& inputs,
                           double tolerance, double fd_step = 1e-5,
                           long max_coords_per_input = -1,
                           uint64_t subset_seed = 0x5eedc0de);

// Deterministic scalarizer: weighted sum of a tensor output with a fixed
// pseudo-random projection, so tensor-valued ops can be grad-checked.
Var random_projection(Tape& t, Var x, uint64_t seed);

}  // namespace mvs::ad
