#pragma once

#include <cstdint>
#include <vector>

#include "mvs/geometry.hpp"
#include "mvs/image.hpp"
#include "mvs/nn.hpp"

namespace mvs::prompt {

enum class DepthSpace { kMetric, kLogit };

// Per-pixel sparse depth with validity. Entries where the mask is false are
// ignored (stored as 0). In logit space all valid entries are finite.
struct SparsePrompt {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<uint8_t> mask;
  DepthSpace space = DepthSpace::kMetric;
  bool empty_warning = false;  // synthesis produced no valid point

  SparsePrompt() = default;
  SparsePrompt(int w, int h)
      : width(w), height(h),
        depth(static_cast<size_t>(w) * h, 0.0),
        mask(static_cast<size_t>(w) * h, 0) {}

  size_t idx(int row, int col) const { return static_cast<size_t>(row) * width + col; }
  bool is_valid(int row, int col) const { return mask[idx(row, col)] != 0; }
  double at(int row, int col) const { return depth[idx(row, col)]; }
  void set(int row, int col, double v) {
    depth[idx(row, col)] = v;
    mask[idx(row, col)] = 1;
  }
  void clear(int row, int col) {
    depth[idx(row, col)] = 0.0;
    mask[idx(row, col)] = 0;
  }
  size_t valid_count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m != 0;
    return n;
  }
};

// LiDAR-style corruption of dense ground truth. The last block of fields
// are artifact defaults recorded here rather than in the paper-visible
// parameters; they are surfaced through the pipeline config.
struct PromptCorruption {
  int beams = 64;                    // [4,64] in the sweeps; >=1 required
  double inclination_offset = 0.0;   // radians, shifts beam centers
  double azimuth_phase = 0.0;        // radians, yaws the virtual sensor
  double radial_noise_sigma = 0.0;   // meters, along the ray
  double dropout_fraction = 0.0;
  double outlier_fraction = 0.0;
  double occlusion_from_bottom = 0.0;
  uint64_t seed = 0;

  bool beam_selection = true;        // false keeps every valid pixel
  // Beam thickness: half the bin width of the densest (64-beam) pattern,
  // capped at half the current bin width so beams stay disjoint.
  double beam_halfwidth_fraction = 1.0 / 128.0;  // of the inclination span
  double extrinsic_rotation_max = 2.0 * M_PI / 180.0;  // radians
  double extrinsic_translation_max = 0.2;              // meters
  double edge_noise_scale = 3.0;     // sigma multiplier at depth edges
  double edge_gradient_threshold = 0.5;  // m/px
  double outlier_d_min = 1.0;        // range for outlier replacement
  double outlier_d_max = 100.0;

  void validate() const;
};

// Token stream from the sparsity-aware encoder: one token per 16x16 cell,
// rows with a false mask are exactly zero.
struct MetricTokens {
  int grid_h = 0;
  int grid_w = 0;
  ad::Var tokens;                   // [grid_h*grid_w, D] on the caller's tape
  std::vector<uint8_t> token_mask;  // grid_h*grid_w
};

// Simulate a sparse LiDAR prompt from dense ground truth: back-project into
// a randomized virtual sensor frame, keep pixels near beam inclinations,
// perturb ranges, inject outliers, drop points, and occlude bottom rows.
// Deterministic in (gt, view, corruption).
SparsePrompt synthesize_prompt(const DepthMap& gt, const geom::CameraView& view,
                               const PromptCorruption& corruption);

struct LogitResult {
  SparsePrompt prompt;  // logit space
  long clamped = 0;     // pixels saturated at the epsilon clamp
};

// d_norm = (log d - log d_min)/(log d_max - log d_min) clamped to
// [eps, 1-eps]; output = log(d_norm/(1-d_norm)). Mask preserved.
LogitResult normalize_to_logit(const SparsePrompt& metric, double d_min, double d_max,
                               double eps = 1e-6);

// Inverse of normalize_to_logit on the unclamped interior (scalar helper).
double logit_to_depth(double logit, double d_min, double d_max);

// Quarter-resolution prompt for cost-volume use: per 4x4 cell, the valid
// pixel nearest the cell center (validity-preserving, no averaging).
SparsePrompt downsample_quarter(const SparsePrompt& prompt);

// Sparsity-aware encoder: [logit depth, mask, Y, X] stack -> stem stride-2
// convolution -> 3 x (3x3 conv block -> 2x2 masked max-pool) -> 1x1
// projection to token_dim -> row-major tokens + sinusoidal 2D positions,
// invalid tokens zeroed. Requires H, W divisible by 16.
struct PromptEncoder {
  int token_dim = 0;
  nn::Conv2d stem;
  nn::Conv2d stage1, stage2, stage3;
  nn::Conv2d proj;

  static PromptEncoder create(ad::ParamStore& ps, const std::string& name,
                              int token_dim, int width = 16);
  MetricTokens forward(ad::Tape& t, const SparsePrompt& logit_prompt) const;
};

enum class Availability { kBoth, kReferenceOnly, kSourcesOnly };

// Categorical draw with probabilities (0.5, 0.25, 0.25).
Availability sample_prompt_availability(uint64_t seed);

// Bernoulli(p) decision used for modality dropout.
bool draw_modality_drop(double probability, uint64_t seed);

// Zero the whole stream (tokens and mask) with probability p.
MetricTokens drop_modality(MetricTokens tokens, double probability, uint64_t seed);

}  // namespace mvs::prompt
