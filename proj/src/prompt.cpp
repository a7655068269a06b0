#include "mvs/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvs/ops.hpp"
#include "mvs/rng.hpp"

namespace mvs::prompt {

void PromptCorruption::validate() const {
  if (beams < 1) throw std::invalid_argument("PromptCorruption: beams must be >= 1");
  for (double f : {dropout_fraction, outlier_fraction, occlusion_from_bottom})
    if (f < 0.0 || f > 1.0)
      throw std::invalid_argument("PromptCorruption: fractions must be in [0,1]");
}

namespace {

// Small random sensor offset (camera-from-sensor), plus the deterministic
// azimuth yaw. Rotation about a random axis by up to extrinsic_rotation_max.
geom::Pose sensor_offset(const PromptCorruption& c, Rng& rng) {
  using geom::Matrix3d;
  using geom::Vector3d;
  Matrix3d yaw =
      Eigen::AngleAxisd(c.azimuth_phase, Vector3d(0, -1, 0)).toRotationMatrix();
  Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  if (axis.norm() < 1e-9) axis = Vector3d(0, 0, 1);
  axis.normalize();
  const double angle = rng.uniform(0.0, c.extrinsic_rotation_max);
  geom::Pose offset;
  offset.rotation = yaw * Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  offset.translation = Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)) *
                       c.extrinsic_translation_max;
  return offset;
}

// Depth-edge detector for boundary perturbations: max |forward difference|
// against the valid 4-neighborhood, in meters per pixel.
bool near_depth_edge(const DepthMap& gt, int i, int j, double threshold) {
  const double d = gt.at(i, j);
  const int H = gt.height, W = gt.width;
  const int di[4] = {0, 0, -1, 1};
  const int dj[4] = {-1, 1, 0, 0};
  for (int k = 0; k < 4; ++k) {
    const int ii = i + di[k], jj = j + dj[k];
    if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
    if (!gt.is_valid(ii, jj)) continue;
    if (std::abs(gt.at(ii, jj) - d) > threshold) return true;
  }
  return false;
}

}  // namespace

SparsePrompt synthesize_prompt(const DepthMap& gt, const geom::CameraView& view,
                               const PromptCorruption& corruption) {
  corruption.validate();
  SparsePrompt out(gt.width, gt.height);
  out.space = DepthSpace::kMetric;
  if (gt.valid_count() == 0) {
    out.empty_warning = true;
    return out;
  }

  Rng rng(corruption.seed);
  const geom::Pose sensor_pose = view.pose * sensor_offset(corruption, rng);

  // Inclination of every valid pixel in the virtual sensor frame
  // (camera convention y down, so "up" is -y).
  std::vector<double> incl(static_cast<size_t>(gt.width) * gt.height, 0.0);
  double incl_min = std::numeric_limits<double>::infinity();
  double incl_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < gt.height; ++i)
    for (int j = 0; j < gt.width; ++j) {
      if (!gt.is_valid(i, j)) continue;
      const geom::Vector3d world = geom::backproject({j + 0.5, i + 0.5}, gt.at(i, j),
                                                     view.intrinsics, view.pose);
      const geom::Vector3d s = sensor_pose.to_camera(world);
      const double a = std::atan2(-s.y(), std::hypot(s.x(), s.z()));
      incl[gt.idx(i, j)] = a;
      incl_min = std::min(incl_min, a);
      incl_max = std::max(incl_max, a);
    }

  // Beam retention.
  const double span = incl_max - incl_min;
  const double bin_w = span / corruption.beams;
  const double tol = std::min(bin_w / 2.0, span * corruption.beam_halfwidth_fraction);
  for (int i = 0; i < gt.height; ++i)
    for (int j = 0; j < gt.width; ++j) {
      if (!gt.is_valid(i, j)) continue;
      if (corruption.beam_selection && span > 0.0) {
        const double rel = incl[gt.idx(i, j)] - incl_min - corruption.inclination_offset;
        double nearest = std::round(rel / bin_w - 0.5) + 0.5;  // bin centers at (b+0.5)w
        nearest = std::clamp(nearest, 0.5, corruption.beams - 0.5);
        if (std::abs(rel - nearest * bin_w) > tol) continue;
      }
      out.set(i, j, gt.at(i, j));
    }

  // Corruption draws happen in row-major order over the retained pixels so
  // the result is a pure function of (gt, view, corruption).
  for (int i = 0; i < gt.height; ++i)
    for (int j = 0; j < gt.width; ++j) {
      if (!out.is_valid(i, j)) continue;
      double d = out.at(i, j);
      const bool edge = near_depth_edge(gt, i, j, corruption.edge_gradient_threshold);
      const double sigma =
          corruption.radial_noise_sigma * (edge ? corruption.edge_noise_scale : 1.0);
      const double noise = rng.normal();  // drawn regardless, for determinism
      if (sigma > 0.0) {
        // radial: perturb the range along the ray, then convert back to z
        const double ru = (j + 0.5 - view.intrinsics.cx) / view.intrinsics.fx;
        const double rv = (i + 0.5 - view.intrinsics.cy) / view.intrinsics.fy;
        const double range_per_z = std::sqrt(1.0 + ru * ru + rv * rv);
        double range = d * range_per_z + noise * sigma;
        d = std::max(range / range_per_z, 1e-3);
      }
      if (rng.uniform() < corruption.outlier_fraction)
        d = rng.uniform(corruption.outlier_d_min, corruption.outlier_d_max);
      if (rng.uniform() < corruption.dropout_fraction) {
        out.clear(i, j);
        continue;
      }
      out.depth[out.idx(i, j)] = d;
    }

  if (corruption.occlusion_from_bottom > 0.0) {
    const int first_occluded = gt.height - static_cast<int>(std::floor(
                                               gt.height * corruption.occlusion_from_bottom));
    for (int i = std::max(first_occluded, 0); i < gt.height; ++i)
      for (int j = 0; j < gt.width; ++j) out.clear(i, j);
  }

  out.empty_warning = out.valid_count() == 0;
  return out;
}

LogitResult normalize_to_logit(const SparsePrompt& metric, double d_min, double d_max,
                               double eps) {
  if (!(d_min < d_max))
    throw std::invalid_argument("normalize_to_logit: need d_min < d_max");
  LogitResult res;
  res.prompt = metric;
  res.prompt.space = DepthSpace::kLogit;
  const double log_min = std::log(d_min);
  const double log_span = std::log(d_max) - log_min;
  for (int i = 0; i < metric.height; ++i)
    for (int j = 0; j < metric.width; ++j) {
      if (!metric.is_valid(i, j)) continue;
      double dn = (std::log(metric.at(i, j)) - log_min) / log_span;
      if (dn < eps || dn > 1.0 - eps) {
        dn = std::clamp(dn, eps, 1.0 - eps);
        ++res.clamped;
      }
      res.prompt.depth[res.prompt.idx(i, j)] = std::log(dn / (1.0 - dn));
    }
  return res;
}

double logit_to_depth(double logit, double d_min, double d_max) {
  const double s = 1.0 / (1.0 + std::exp(-logit));
  return std::exp(std::log(d_min) + std::log(d_max / d_min) * s);
}

SparsePrompt downsample_quarter(const SparsePrompt& prompt) {
  if (prompt.width % 4 || prompt.height % 4)
    throw std::invalid_argument("downsample_quarter: dims must be divisible by 4");
  SparsePrompt out(prompt.width / 4, prompt.height / 4);
  out.space = prompt.space;
  for (int io = 0; io < out.height; ++io)
    for (int jo = 0; jo < out.width; ++jo) {
      // valid pixel nearest the 4x4 cell center
      double best = std::numeric_limits<double>::infinity();
      for (int di = 0; di < 4; ++di)
        for (int dj = 0; dj < 4; ++dj) {
          const int i = io * 4 + di, j = jo * 4 + dj;
          if (!prompt.is_valid(i, j)) continue;
          const double dist = std::hypot(di - 1.5, dj - 1.5);
          if (dist < best) {
            best = dist;
            out.set(io, jo, prompt.at(i, j));
          }
        }
    }
  return out;
}

PromptEncoder PromptEncoder::create(ad::ParamStore& ps, const std::string& name,
                                    int token_dim, int width) {
  PromptEncoder e;
  e.token_dim = token_dim;
  e.stem = nn::Conv2d::create(ps, name + ".stem", 4, width, 3, 2, 1);
  e.stage1 = nn::Conv2d::create(ps, name + ".s1", width, width, 3, 1, 1);
  e.stage2 = nn::Conv2d::create(ps, name + ".s2", width, width, 3, 1, 1);
  e.stage3 = nn::Conv2d::create(ps, name + ".s3", width, width, 3, 1, 1);
  e.proj = nn::Conv2d::create(ps, name + ".proj", width, token_dim, 1, 1, 0);
  return e;
}

namespace {

Tensor or_pool2x2(const Tensor& mask) {
  const int H = mask.dim(0), W = mask.dim(1);
  Tensor out({H / 2, W / 2});
  for (int i = 0; i < H / 2; ++i)
    for (int j = 0; j < W / 2; ++j) {
      const bool any = mask.at2(2 * i, 2 * j) != 0.0 || mask.at2(2 * i, 2 * j + 1) != 0.0 ||
                       mask.at2(2 * i + 1, 2 * j) != 0.0 ||
                       mask.at2(2 * i + 1, 2 * j + 1) != 0.0;
      out.at2(i, j) = any ? 1.0 : 0.0;
    }
  return out;
}

}  // namespace

MetricTokens PromptEncoder::forward(ad::Tape& t, const SparsePrompt& p) const {
  if (p.width % 16 || p.height % 16)
    throw std::invalid_argument("PromptEncoder: dims must be divisible by 16, got " +
                                std::to_string(p.width) + "x" + std::to_string(p.height));
  if (p.space != DepthSpace::kLogit)
    throw std::invalid_argument("PromptEncoder: prompt must be in logit space");
  const int H = p.height, W = p.width;

  Tensor input({4, H, W});
  Tensor mask_full({H, W});
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const bool v = p.is_valid(i, j);
      input[static_cast<long>(0) * H * W + static_cast<long>(i) * W + j] =
          v ? p.at(i, j) : 0.0;
      input[static_cast<long>(1) * H * W + static_cast<long>(i) * W + j] = v ? 1.0 : 0.0;
      input[static_cast<long>(2) * H * W + static_cast<long>(i) * W + j] = (i + 0.5) / H;
      input[static_cast<long>(3) * H * W + static_cast<long>(i) * W + j] = (j + 0.5) / W;
      mask_full.at2(i, j) = v ? 1.0 : 0.0;
    }

  ad::Var x = t.constant(std::move(input));
  x = ad::gelu(stem.forward(t, x));           // 1/2
  Tensor mask = or_pool2x2(mask_full);        // validity tracks 2x2 pixel ownership
  auto pool = [&](const nn::Conv2d& conv, ad::Var in, const Tensor& m) {
    ad::Var h = ad::gelu(conv.forward(t, in));
    return ad::masked_max_pool2x2(h, m);
  };
  auto p1 = pool(stage1, x, mask);            // 1/4
  auto p2 = pool(stage2, p1.values, p1.mask);  // 1/8
  auto p3 = pool(stage3, p2.values, p2.mask);  // 1/16
  ad::Var feat = proj.forward(t, p3.values);   // [D, H/16, W/16]

  MetricTokens out;
  out.grid_h = H / 16;
  out.grid_w = W / 16;
  const int n = out.grid_h * out.grid_w;
  // CHW -> row-major [n, D]
  ad::Var flat = ad::reshape(feat, {token_dim, n});
  ad::Var tokens = ad::transpose2(flat);
  tokens = ad::add(tokens, t.constant(nn::sinusoidal_position_2d(out.grid_h, out.grid_w,
                                                                 token_dim)));
  // zero invalid rows (mask is constant data)
  Tensor row_mask({n, token_dim});
  out.token_mask.resize(n);
  for (int gi = 0; gi < out.grid_h; ++gi)
    for (int gj = 0; gj < out.grid_w; ++gj) {
      const bool v = p3.mask.at2(gi, gj) != 0.0;
      out.token_mask[static_cast<size_t>(gi) * out.grid_w + gj] = v ? 1 : 0;
      for (int d = 0; d < token_dim; ++d)
        row_mask.at2(gi * out.grid_w + gj, d) = v ? 1.0 : 0.0;
    }
  out.tokens = ad::mul(tokens, t.constant(std::move(row_mask)));
  return out;
}

Availability sample_prompt_availability(uint64_t seed) {
  Rng rng = Rng::stream(seed, "prompt-availability");
  const double u = rng.uniform();
  if (u < 0.5) return Availability::kBoth;
  if (u < 0.75) return Availability::kReferenceOnly;
  return Availability::kSourcesOnly;
}

bool draw_modality_drop(double probability, uint64_t seed) {
  if (probability < 0.0 || probability > 1.0)
    throw std::invalid_argument("draw_modality_drop: probability must be in [0,1]");
  Rng rng = Rng::stream(seed, "modality-drop");
  return rng.uniform() < probability;
}

MetricTokens drop_modality(MetricTokens tokens, double probability, uint64_t seed) {
  if (!draw_modality_drop(probability, seed)) return tokens;
  tokens.tokens = ad::scale(tokens.tokens, 0.0);
  std::fill(tokens.token_mask.begin(), tokens.token_mask.end(), 0);
  return tokens;
}

}  // namespace mvs::prompt
