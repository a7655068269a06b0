#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mvs/image.hpp"

namespace mvs::geom {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

// Pinhole intrinsics in pixels. Continuous pixel coordinates use the
// pixel-center convention: integer pixel (row i, col j) samples the
// continuous coordinate (u, v) = (j + 0.5, i + 0.5).
struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;

  // Intrinsics of the same camera at 1/s resolution.
  Intrinsics scaled(int s) const {
    Intrinsics k = *this;
    k.fx /= s;
    k.fy /= s;
    k.cx /= s;
    k.cy /= s;
    k.width /= s;
    k.height /= s;
    return k;
  }
};

// Camera-to-world rigid transform: `rotation` maps camera axes into world
// axes and `translation` is the camera center in world coordinates. World
// point of camera point Xc is R*Xc + t.
struct Pose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  void validate(double tol = 1e-9) const;

  static Pose identity() { return Pose{}; }

  Vector3d to_world(const Vector3d& cam) const { return rotation * cam + translation; }
  Vector3d to_camera(const Vector3d& world) const {
    return rotation.transpose() * (world - translation);
  }

  // Composition: (a * b) maps b's camera frame through a, i.e.
  // (a*b).to_world(x) == a.to_world(b.to_world(x)).
  Pose operator*(const Pose& o) const {
    Pose p;
    p.rotation = rotation * o.rotation;
    p.translation = rotation * o.translation + translation;
    return p;
  }

  Pose inverse() const {
    Pose p;
    p.rotation = rotation.transpose();
    p.translation = -(rotation.transpose() * translation);
    return p;
  }
};

// One view at one timestep: calibration, pose, and the image payload.
struct CameraView {
  Intrinsics intrinsics;
  Pose pose;
  Image image;
  int timestamp_index = 0;

  void validate() const;
};

struct Projection {
  double u = 0, v = 0;  // continuous pixel coordinates
  double z = 0;         // camera-frame depth in meters
  bool valid = false;   // in front of the camera and inside [0,w)x[0,h)
};

// Depth hypothesis planes sampled uniformly in log space,
// values[k] = exp(log d_min + k/(count-1) * log(d_max/d_min)).
struct DepthHypothesisSet {
  double d_min = 0;
  double d_max = 0;
  int count = 0;
  std::vector<double> values;
};

// World point of continuous pixel (u,v) at camera-frame depth `depth`.
// Throws std::invalid_argument for non-positive depth.
Vector3d backproject(const Vector2d& pixel, double depth, const Intrinsics& k,
                     const Pose& pose);

// Pinhole projection of a world point. Invalidity (behind the camera or out
// of bounds) is signaled through the flag, never an error.
Projection project(const Vector3d& point, const Intrinsics& k, const Pose& pose);

// Ray through a pixel: origin is the camera center, direction is unit norm
// in world coordinates.
struct Ray {
  Vector3d origin;
  Vector3d direction;
};
Ray camera_ray(const Vector2d& pixel, const Intrinsics& k, const Pose& pose);

// Transform taking coordinates in frame `a` to coordinates in frame `b`:
// result.to_world(x_a) == b.to_camera(a.to_world(x_a)).
Pose relative_pose(const Pose& a, const Pose& b);

// Log-spaced hypothesis depths. Requires 0 < d_min < d_max and count >= 2.
DepthHypothesisSet make_hypotheses(double d_min, double d_max, int count);

// Index of the hypothesis nearest to `depth` (absolute difference).
int nearest_hypothesis(const DepthHypothesisSet& h, double depth);

}  // namespace mvs::geom
