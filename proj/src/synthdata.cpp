#include "mvs/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mvs/io/camera_json.hpp"
#include "mvs/io/pfm.hpp"
#include "mvs/io/png_io.hpp"
#include "mvs/rng.hpp"

namespace mvs::synth {

namespace fs = std::filesystem;
using geom::Pose;
using geom::Vector3d;
using nlohmann::json;

namespace {

// --- procedural value noise -------------------------------------------------

uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double lattice(int64_t ix, int64_t iy, int64_t iz, uint64_t seed) {
  uint64_t h = mix64(mix64(mix64(seed, static_cast<uint64_t>(ix)),
                           static_cast<uint64_t>(iy)),
                     static_cast<uint64_t>(iz));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise3(double x, double y, double z, uint64_t seed) {
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy),
             iz = static_cast<int64_t>(fz);
  const double tx = smooth(x - fx), ty = smooth(y - fy), tz = smooth(z - fz);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    double wz = dz ? tz : 1.0 - tz;
    for (int dy = 0; dy < 2; ++dy) {
      double wy = dy ? ty : 1.0 - ty;
      for (int dx = 0; dx < 2; ++dx) {
        double wx = dx ? tx : 1.0 - tx;
        acc += wx * wy * wz * lattice(ix + dx, iy + dy, iz + dz, seed);
      }
    }
  }
  return acc;
}

double fractal_noise3(const Vector3d& p, uint64_t seed) {
  double acc = 0.0, amp = 1.0, freq = 1.0, norm = 0.0;
  for (int octave = 0; octave < 3; ++octave) {
    acc += amp * value_noise3(p.x() * freq, p.y() * freq, p.z() * freq,
                              seed + 0x9e37u * octave);
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return acc / norm;
}

void texture_color(const Primitive& prim, const Vector3d& local, double* rgb) {
  const Vector3d p = local * prim.texture_scale;
  for (int c = 0; c < 3; ++c) {
    const double n = fractal_noise3(p, prim.texture_seed * 3 + c);
    rgb[c] = std::clamp(0.15 + 0.7 * n, 0.0, 1.0);
  }
}

// --- ray / primitive intersections (object frame) ---------------------------

constexpr double kRayEps = 1e-9;

bool hit_plane(const Vector3d& o, const Vector3d& d, const Vector3d& size, double* t) {
  if (std::abs(d.z()) < kRayEps) return false;
  const double tt = -o.z() / d.z();
  if (tt <= kRayEps) return false;
  const double px = o.x() + tt * d.x();
  const double py = o.y() + tt * d.y();
  if (std::abs(px) > size.x() || std::abs(py) > size.y()) return false;
  *t = tt;
  return true;
}

bool hit_box(const Vector3d& o, const Vector3d& d, const Vector3d& size, double* t) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < kRayEps) {
      if (std::abs(o[a]) > size[a]) return false;
      continue;
    }
    double lo = (-size[a] - o[a]) / d[a];
    double hi = (size[a] - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  const double tt = t0 > kRayEps ? t0 : t1;
  if (tt <= kRayEps) return false;
  *t = tt;
  return true;
}

bool hit_sphere(const Vector3d& o, const Vector3d& d, double radius, double* t) {
  const double b = o.dot(d);
  const double c = o.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  double tt = -b - s;
  if (tt <= kRayEps) tt = -b + s;
  if (tt <= kRayEps) return false;
  *t = tt;
  return true;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  const Primitive* prim = nullptr;
  Vector3d local;
};

// Nearest intersection along a unit world ray.
bool cast(const SceneSpec& spec, const Vector3d& origin, const Vector3d& dir, Hit* hit) {
  hit->t = std::numeric_limits<double>::infinity();
  hit->prim = nullptr;
  for (const Primitive& prim : spec.primitives) {
    const Vector3d o = prim.pose.to_camera(origin);
    const Vector3d d = prim.pose.rotation.transpose() * dir;
    double t;
    bool ok = false;
    switch (prim.kind) {
      case PrimitiveKind::kPlane:
        ok = hit_plane(o, d, prim.size, &t);
        break;
      case PrimitiveKind::kBox:
        ok = hit_box(o, d, prim.size, &t);
        break;
      case PrimitiveKind::kSphere:
        ok = hit_sphere(o, d, prim.size.x(), &t);
        break;
    }
    if (ok && t < hit->t) {
      hit->t = t;
      hit->prim = &prim;
      hit->local = o + t * d;
    }
  }
  return hit->prim != nullptr;
}

Pose look_at(const Vector3d& eye, const Vector3d& target) {
  // camera convention: x right, y down, z forward; world "down" is +y
  Vector3d zc = (target - eye).normalized();
  Vector3d xc = Vector3d(0, 1, 0).cross(zc);
  if (xc.norm() < 1e-9) xc = Vector3d(1, 0, 0);
  xc.normalize();
  const Vector3d yc = zc.cross(xc);
  Pose p;
  p.rotation.col(0) = xc;
  p.rotation.col(1) = yc;
  p.rotation.col(2) = zc;
  p.translation = eye;
  return p;
}

}  // namespace

std::vector<Pose> trajectory(const TrajectoryParams& params) {
  if (params.frames < 1) throw std::invalid_argument("trajectory: frames must be >= 1");
  std::vector<Pose> poses;
  poses.reserve(params.frames);
  switch (params.kind) {
    case TrajectoryKind::kStatic:
      for (int k = 0; k < params.frames; ++k) poses.push_back(params.start);
      break;
    case TrajectoryKind::kTranslate:
      for (int k = 0; k < params.frames; ++k) {
        Pose p = params.start;
        p.translation += static_cast<double>(k) * params.step;
        poses.push_back(p);
      }
      break;
    case TrajectoryKind::kLowParallax: {
      const double step =
          params.low_parallax_epsilon / std::max(params.frames - 1, 1);
      for (int k = 0; k < params.frames; ++k) {
        Pose p = params.start;
        p.translation += k * step * Vector3d(1, 0, 0);
        poses.push_back(p);
      }
      break;
    }
    case TrajectoryKind::kOrbit: {
      const Vector3d arm = params.start.translation - params.orbit_center;
      for (int k = 0; k < params.frames; ++k) {
        const double a = k * params.orbit_angle_per_frame;
        const Eigen::Matrix3d rot =
            Eigen::AngleAxisd(a, Vector3d(0, 1, 0)).toRotationMatrix();
        const Vector3d eye = params.orbit_center + rot * arm;
        poses.push_back(look_at(eye, params.orbit_center));
      }
      break;
    }
  }
  return poses;
}

Sequence render(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw std::invalid_argument("render: empty primitive list");
  if (spec.trajectory.empty()) throw std::invalid_argument("render: empty trajectory");
  spec.intrinsics.validate();

  Sequence seq;
  seq.d_min = spec.d_min;
  seq.d_max = spec.d_max;
  const int W = spec.intrinsics.width, H = spec.intrinsics.height;
  for (int f = 0; f < spec.frames(); ++f) {
    FrameData frame;
    frame.view.intrinsics = spec.intrinsics;
    frame.view.pose = spec.trajectory[f];
    frame.view.timestamp_index = f;
    frame.view.image = Image(W, H);
    frame.gt_depth = DepthMap(W, H);
    Hit hit;
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        const geom::Ray ray =
            geom::camera_ray({j + 0.5, i + 0.5}, spec.intrinsics, frame.view.pose);
        if (!cast(spec, ray.origin, ray.direction, &hit)) continue;
        const Vector3d world = ray.origin + hit.t * ray.direction;
        const double depth = frame.view.pose.to_camera(world).z();
        frame.gt_depth.set(i, j, depth);
        texture_color(*hit.prim, hit.local, &frame.view.image.at(i, j, 0));
      }
    seq.frames.push_back(std::move(frame));
  }
  if (texture_energy(seq.frames[0].view.image) < 1e-3)
    throw std::runtime_error("render: degenerate texture (energy below threshold)");
  return seq;
}

std::optional<double> cast_depth(const SceneSpec& spec, const Pose& pose,
                                 const geom::Intrinsics& k, double u, double v) {
  const geom::Ray ray = geom::camera_ray({u, v}, k, pose);
  Hit hit;
  if (!cast(spec, ray.origin, ray.direction, &hit)) return std::nullopt;
  const Vector3d world = ray.origin + hit.t * ray.direction;
  return pose.to_camera(world).z();
}

std::vector<FrameBundle> make_bundles(const Sequence& seq,
                                      const std::vector<int>& offsets) {
  std::vector<FrameBundle> bundles;
  const int T = static_cast<int>(seq.frames.size());
  for (int t = 0; t < T; ++t) {
    FrameBundle b;
    b.reference_index = t;
    b.reference = &seq.frames[t];
    for (int off : offsets) {
      const int s = t + off;
      if (s >= 0 && s < T && s != t) b.sources.push_back(&seq.frames[s]);
    }
    bundles.push_back(std::move(b));
  }
  return bundles;
}

double texture_energy(const Image& image) {
  double acc = 0.0;
  long n = 0;
  for (int i = 0; i < image.height; ++i)
    for (int j = 0; j + 1 < image.width; ++j)
      for (int c = 0; c < 3; ++c) {
        acc += std::abs(image.at(i, j + 1, c) - image.at(i, j, c));
        ++n;
      }
  return n ? acc / n : 0.0;
}

namespace {

json pose_to_json(const Pose& p) {
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = p.rotation(r, c);
  return json{{"rotation", rot},
              {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

Pose pose_from_json(const json& j) {
  Pose p;
  const auto rot = j.at("rotation").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[r * 3 + c];
  p.translation = Vector3d(tr[0], tr[1], tr[2]);
  return p;
}

const char* kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::kPlane: return "plane";
    case PrimitiveKind::kBox: return "box";
    case PrimitiveKind::kSphere: return "sphere";
  }
  return "plane";
}

PrimitiveKind kind_from_name(const std::string& s) {
  if (s == "plane") return PrimitiveKind::kPlane;
  if (s == "box") return PrimitiveKind::kBox;
  if (s == "sphere") return PrimitiveKind::kSphere;
  throw std::runtime_error("unknown primitive kind: " + s);
}

}  // namespace

void save_sequence(const std::string& dir, const SceneSpec& spec, const Sequence& seq) {
  fs::create_directories(dir);
  json meta;
  meta["d_min"] = seq.d_min;
  meta["d_max"] = seq.d_max;
  meta["frames"] = static_cast<int>(seq.frames.size());
  meta["seed"] = spec.seed;
  meta["intrinsics"] = {{"fx", spec.intrinsics.fx}, {"fy", spec.intrinsics.fy},
                        {"cx", spec.intrinsics.cx}, {"cy", spec.intrinsics.cy},
                        {"width", spec.intrinsics.width},
                        {"height", spec.intrinsics.height}};
  json prims = json::array();
  for (const Primitive& p : spec.primitives)
    prims.push_back(json{{"kind", kind_name(p.kind)},
                         {"pose", pose_to_json(p.pose)},
                         {"size", {p.size.x(), p.size.y(), p.size.z()}},
                         {"texture_seed", p.texture_seed},
                         {"texture_scale", p.texture_scale}});
  meta["primitives"] = prims;
  json traj = json::array();
  for (const Pose& p : spec.trajectory) traj.push_back(pose_to_json(p));
  meta["trajectory"] = traj;
  {
    std::ofstream os(fs::path(dir) / "seq.json");
    if (!os) throw std::runtime_error("save_sequence: cannot write seq.json in " + dir);
    os << meta.dump(2) << "\n";
  }

  char name[32];
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "frame_%04zu", t);
    const fs::path fdir = fs::path(dir) / name;
    fs::create_directories(fdir);
    const FrameData& f = seq.frames[t];
    io::write_png((fdir / "view_00.png").string(), f.view.image);
    io::write_pfm((fdir / "depth.pfm").string(), f.gt_depth);
    DepthMap prompt_map(f.prompt.width, f.prompt.height);
    for (int i = 0; i < f.prompt.height; ++i)
      for (int j = 0; j < f.prompt.width; ++j)
        if (f.prompt.is_valid(i, j)) prompt_map.set(i, j, f.prompt.at(i, j));
    if (prompt_map.width == 0) prompt_map = DepthMap(f.gt_depth.width, f.gt_depth.height);
    io::write_pfm((fdir / "prompt.pfm").string(), prompt_map);
    io::save_camera((fdir / "camera.json").string(),
                    io::Camera{f.view.intrinsics, f.view.pose});
  }
}

Sequence load_sequence(const std::string& dir) {
  const fs::path seq_path = fs::path(dir) / "seq.json";
  std::ifstream is(seq_path);
  if (!is) throw std::runtime_error("load_sequence: missing " + seq_path.string());
  json meta;
  try {
    is >> meta;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_sequence: " + seq_path.string() +
                             ": parse error at byte " + std::to_string(e.byte));
  }
  Sequence seq;
  seq.d_min = meta.at("d_min").get<double>();
  seq.d_max = meta.at("d_max").get<double>();
  const int frames = meta.at("frames").get<int>();
  char name[32];
  for (int t = 0; t < frames; ++t) {
    std::snprintf(name, sizeof(name), "frame_%04d", t);
    const fs::path fdir = fs::path(dir) / name;
    FrameData f;
    const std::string cam_path = (fdir / "camera.json").string();
    if (!fs::exists(cam_path))
      throw std::runtime_error("load_sequence: missing camera file " + cam_path);
    io::Camera cam = io::load_camera(cam_path);
    f.view.intrinsics = cam.intrinsics;
    f.view.pose = cam.pose;
    f.view.timestamp_index = t;
    f.view.image = io::read_png((fdir / "view_00.png").string());
    f.gt_depth = io::read_pfm((fdir / "depth.pfm").string());
    const DepthMap pm = io::read_pfm((fdir / "prompt.pfm").string());
    f.prompt = prompt::SparsePrompt(pm.width, pm.height);
    for (int i = 0; i < pm.height; ++i)
      for (int j = 0; j < pm.width; ++j)
        if (pm.is_valid(i, j)) f.prompt.set(i, j, pm.at(i, j));
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

// Restore a SceneSpec from the seq.json echo (for re-rendering from disk).
SceneSpec scene_spec_from_json(const json& meta) {
  SceneSpec spec;
  spec.d_min = meta.at("d_min").get<double>();
  spec.d_max = meta.at("d_max").get<double>();
  spec.seed = meta.value("seed", 0ull);
  const json& k = meta.at("intrinsics");
  spec.intrinsics.fx = k.at("fx").get<double>();
  spec.intrinsics.fy = k.at("fy").get<double>();
  spec.intrinsics.cx = k.at("cx").get<double>();
  spec.intrinsics.cy = k.at("cy").get<double>();
  spec.intrinsics.width = k.at("width").get<int>();
  spec.intrinsics.height = k.at("height").get<int>();
  for (const json& pj : meta.at("primitives")) {
    Primitive p;
    p.kind = kind_from_name(pj.at("kind").get<std::string>());
    p.pose = pose_from_json(pj.at("pose"));
    const auto sz = pj.at("size").get<std::vector<double>>();
    p.size = Vector3d(sz[0], sz[1], sz[2]);
    p.texture_seed = pj.at("texture_seed").get<uint64_t>();
    p.texture_scale = pj.at("texture_scale").get<double>();
    spec.primitives.push_back(p);
  }
  for (const json& tj : meta.at("trajectory")) spec.trajectory.push_back(pose_from_json(tj));
  return spec;
}

SceneSpec preset_scene(const std::string& name, int width, int height, int frames,
                       TrajectoryKind traj, uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.intrinsics.fx = spec.intrinsics.fy = 0.9 * width;
  spec.intrinsics.cx = width / 2.0;
  spec.intrinsics.cy = height / 2.0;
  spec.intrinsics.width = width;
  spec.intrinsics.height = height;
  spec.d_min = 1.5;
  spec.d_max = 12.0;

  auto facing_plane = [&](double z, double tilt_x_rad, uint64_t tseed) {
    Primitive p;
    p.kind = PrimitiveKind::kPlane;
    // plane normal (local z) turned back toward the camera
    p.pose.rotation = (Eigen::AngleAxisd(tilt_x_rad, Vector3d(1, 0, 0)) *
                       Eigen::AngleAxisd(M_PI, Vector3d(0, 1, 0)))
                          .toRotationMatrix();
    p.pose.translation = Vector3d(0, 0, z);
    p.size = Vector3d(4.0 * z, 4.0 * z, 1.0);  // covers the FOV with margin
    p.texture_seed = tseed;
    p.texture_scale = 4.0;
    return p;
  };

  if (name == "plane") {
    spec.primitives.push_back(facing_plane(5.0, 0.0, seed + 1));
  } else if (name == "tilted") {
    spec.primitives.push_back(facing_plane(5.0, 0.45, seed + 1));
  } else if (name == "boxes") {
    spec.primitives.push_back(facing_plane(9.0, 0.35, seed + 1));  // backdrop
    Primitive box;
    box.kind = PrimitiveKind::kBox;
    box.pose.translation = Vector3d(-1.0, 0.6, 4.5);
    box.pose.rotation = Eigen::AngleAxisd(0.4, Vector3d(0, 1, 0)).toRotationMatrix();
    box.size = Vector3d(0.7, 0.9, 0.7);
    box.texture_seed = seed + 2;
    box.texture_scale = 6.0;
    spec.primitives.push_back(box);
    Primitive box2 = box;
    box2.pose.translation = Vector3d(1.4, -0.4, 6.0);
    box2.pose.rotation = Eigen::AngleAxisd(-0.25, Vector3d(0, 1, 0)).toRotationMatrix();
    box2.size = Vector3d(0.8, 0.6, 0.8);
    box2.texture_seed = seed + 3;
    spec.primitives.push_back(box2);
    Primitive ball;
    ball.kind = PrimitiveKind::kSphere;
    ball.pose.translation = Vector3d(0.3, -0.9, 3.6);
    ball.size = Vector3d(0.55, 0.55, 0.55);
    ball.texture_seed = seed + 4;
    ball.texture_scale = 8.0;
    spec.primitives.push_back(ball);
  } else {
    throw std::invalid_argument("preset_scene: unknown preset '" + name + "'");
  }

  TrajectoryParams tp;
  tp.kind = traj;
  tp.frames = frames;
  tp.step = Vector3d(0.08, 0.0, 0.03);
  tp.orbit_center = Vector3d(0, 0, 5.0);
  tp.orbit_angle_per_frame = 0.02;
  spec.trajectory = trajectory(tp);
  return spec;
}

}  // namespace mvs::synth
