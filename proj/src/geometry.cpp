#include "mvs/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvs::geom {

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0))
    throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height))
    throw std::invalid_argument("Intrinsics: principal point outside image");
}

void Pose::validate(double tol) const {
  Matrix3d err = rotation.transpose() * rotation - Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("Pose: rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tol)
    throw std::invalid_argument("Pose: rotation determinant is not +1");
}

void CameraView::validate() const {
  intrinsics.validate();
  pose.validate();
  if (image.width != intrinsics.width || image.height != intrinsics.height)
    throw std::invalid_argument("CameraView: image dimensions do not match intrinsics");
}

Vector3d backproject(const Vector2d& pixel, double depth, const Intrinsics& k,
                     const Pose& pose) {
  if (!(depth > 0))
    throw std::invalid_argument("backproject: depth must be positive, got " +
                                std::to_string(depth));
  Vector3d cam((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth,
               depth);
  return pose.to_world(cam);
}

Projection project(const Vector3d& point, const Intrinsics& k, const Pose& pose) {
  Vector3d cam = pose.to_camera(point);
  Projection p;
  p.z = cam.z();
  if (!(cam.z() > 0)) return p;
  p.u = k.fx * cam.x() / cam.z() + k.cx;
  p.v = k.fy * cam.y() / cam.z() + k.cy;
  p.valid = p.u >= 0.0 && p.u < k.width && p.v >= 0.0 && p.v < k.height;
  return p;
}

Ray camera_ray(const Vector2d& pixel, const Intrinsics& k, const Pose& pose) {
  Vector3d dir_cam((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
  Ray r;
  r.origin = pose.translation;
  r.direction = (pose.rotation * dir_cam).normalized();
  return r;
}

Pose relative_pose(const Pose& a, const Pose& b) {
  Pose rel;
  rel.rotation = b.rotation.transpose() * a.rotation;
  rel.translation = b.rotation.transpose() * (a.translation - b.translation);
  return rel;
}

DepthHypothesisSet make_hypotheses(double d_min, double d_max, int count) {
  if (!(d_min > 0) || !(d_min < d_max))
    throw std::invalid_argument("make_hypotheses: need 0 < d_min < d_max");
  if (count < 2) throw std::invalid_argument("make_hypotheses: count must be >= 2");
  DepthHypothesisSet h;
  h.d_min = d_min;
  h.d_max = d_max;
  h.count = count;
  h.values.resize(count);
  const double log_min = std::log(d_min);
  const double log_ratio = std::log(d_max / d_min);
  for (int i = 0; i < count; ++i)
    h.values[i] = std::exp(log_min + log_ratio * i / (count - 1));
  h.values.front() = d_min;  // endpoint exactness
  h.values.back() = d_max;
  return h;
}

int nearest_hypothesis(const DepthHypothesisSet& h, double depth) {
  int best = 0;
  double best_err = std::abs(h.values[0] - depth);
  for (int i = 1; i < h.count; ++i) {
    double e = std::abs(h.values[i] - depth);
    if (e < best_err) {
      best_err = e;
      best = i;
    }
  }
  return best;
}

}  // namespace mvs::geom
