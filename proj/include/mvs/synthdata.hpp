#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvs/geometry.hpp"
#include "mvs/image.hpp"
#include "mvs/prompt.hpp"

namespace mvs::synth {

enum class PrimitiveKind { kPlane, kBox, kSphere };

// Textured primitive posed in world space. Sizes are half-extents in the
// object frame (planes span local x/y at z=0; spheres use size.x as radius).
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kPlane;
  geom::Pose pose;
  geom::Vector3d size = geom::Vector3d(1, 1, 1);
  uint64_t texture_seed = 0;
  double texture_scale = 1.0;  // noise lattice cells per meter
};

enum class TrajectoryKind { kTranslate, kOrbit, kStatic, kLowParallax };

struct TrajectoryParams {
  TrajectoryKind kind = TrajectoryKind::kTranslate;
  int frames = 4;
  geom::Pose start;                           // pose of frame 0
  geom::Vector3d step = geom::Vector3d(0.1, 0, 0);  // translate: per-frame motion (world)
  geom::Vector3d orbit_center = geom::Vector3d(0, 0, 5);
  double orbit_angle_per_frame = 0.1;         // radians about the world -y axis
  double low_parallax_epsilon = 0.01;         // total baseline bound in meters
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::vector<geom::Pose> trajectory;  // one pose per frame
  geom::Intrinsics intrinsics;
  double d_min = 1.0;
  double d_max = 100.0;
  uint64_t seed = 0;

  int frames() const { return static_cast<int>(trajectory.size()); }
};

// One rendered frame: view with image payload, exact depth, and a prompt
// slot (filled by prompt synthesis, empty right after rendering).
struct FrameData {
  geom::CameraView view;
  DepthMap gt_depth;
  prompt::SparsePrompt prompt;
};

struct Sequence {
  std::vector<FrameData> frames;
  double d_min = 1.0;
  double d_max = 100.0;
};

// Reference frame plus its source views (temporal neighbors).
struct FrameBundle {
  int reference_index = 0;
  const FrameData* reference = nullptr;
  std::vector<const FrameData*> sources;
};

// Deterministic parametric camera paths. `static` yields identical poses;
// `low_parallax` bounds the total baseline by epsilon.
std::vector<geom::Pose> trajectory(const TrajectoryParams& params);

// Analytic ray casting against the primitive list: depth is the camera-frame
// z of the nearest hit, color is procedural value noise sampled in the
// primitive's object frame (view independent, so multi-view matching is
// well-posed). Deterministic per spec. Throws on an empty primitive list.
Sequence render(const SceneSpec& spec);

// Depth of a single ray cast (utility for oracles). Returns nullopt on miss.
std::optional<double> cast_depth(const SceneSpec& spec, const geom::Pose& pose,
                                 const geom::Intrinsics& k, double u, double v);

// Source views for each reference frame: temporal neighbors at the given
// offsets, skipping out-of-range indices.
std::vector<FrameBundle> make_bundles(const Sequence& seq,
                                      const std::vector<int>& offsets = {-2, -1, 1, 2});

// Mean image-gradient energy; degenerate (near-constant) textures make
// photometric matching ill-posed and are rejected by callers.
double texture_energy(const Image& image);

// Directory layout per sequence:
//   {dir}/seq.json
//   {dir}/frame_{t:04}/view_00.png, depth.pfm, prompt.pfm, camera.json
void save_sequence(const std::string& dir, const SceneSpec& spec, const Sequence& seq);
Sequence load_sequence(const std::string& dir);

// Built-in scenes used by tests and the CLI: "plane" (fronto-parallel
// textured plane), "tilted" (sloped plane), "boxes" (ground + boxes +
// sphere).
SceneSpec preset_scene(const std::string& name, int width, int height, int frames,
                       TrajectoryKind traj, uint64_t seed);

}  // namespace mvs::synth
