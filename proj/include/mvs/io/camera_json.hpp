#pragma once

#include <string>
#include <vector>

#include "mvs/geometry.hpp"

namespace mvs::io {

struct Camera {
  geom::Intrinsics intrinsics;
  geom::Pose pose;
};

// Camera files: JSON objects with keys
//   fx, fy, cx, cy, width, height, rotation (9 row-major), translation (3).
// A file may hold one object (one view) or an array (a sequence).
void save_camera(const std::string& path, const Camera& cam);
void save_cameras(const std::string& path, const std::vector<Camera>& cams);
Camera load_camera(const std::string& path);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace mvs::io
