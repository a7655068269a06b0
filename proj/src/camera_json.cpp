#include "mvs/io/camera_json.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mvs::io {

namespace {

using nlohmann::json;

json camera_to_json(const Camera& cam) {
  json j;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  j["width"] = cam.intrinsics.width;
  j["height"] = cam.intrinsics.height;
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = cam.pose.rotation(r, c);
  j["rotation"] = rot;
  j["translation"] = {cam.pose.translation.x(), cam.pose.translation.y(),
                      cam.pose.translation.z()};
  return j;
}

Camera camera_from_json(const json& j, const std::string& path) {
  for (const char* key :
       {"fx", "fy", "cx", "cy", "width", "height", "rotation", "translation"})
    if (!j.contains(key))
      throw std::runtime_error("camera file " + path + ": missing key '" + key + "'");
  Camera cam;
  cam.intrinsics.fx = j["fx"].get<double>();
  cam.intrinsics.fy = j["fy"].get<double>();
  cam.intrinsics.cx = j["cx"].get<double>();
  cam.intrinsics.cy = j["cy"].get<double>();
  cam.intrinsics.width = j["width"].get<int>();
  cam.intrinsics.height = j["height"].get<int>();
  const auto rot = j["rotation"].get<std::vector<double>>();
  const auto tr = j["translation"].get<std::vector<double>>();
  if (rot.size() != 9 || tr.size() != 3)
    throw std::runtime_error("camera file " + path + ": rotation/translation size");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = rot[r * 3 + c];
  cam.pose.translation = geom::Vector3d(tr[0], tr[1], tr[2]);
  cam.intrinsics.validate();
  cam.pose.validate();
  return cam;
}

json parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("camera file not found: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("camera file " + path + ": parse error at byte " +
                             std::to_string(e.byte) + ": " + e.what());
  }
  return j;
}

}  // namespace

void save_camera(const std::string& path, const Camera& cam) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write camera file: " + path);
  os << camera_to_json(cam).dump(2) << "\n";
}

void save_cameras(const std::string& path, const std::vector<Camera>& cams) {
  json arr = json::array();
  for (const Camera& c : cams) arr.push_back(camera_to_json(c));
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write camera file: " + path);
  os << arr.dump(2) << "\n";
}

Camera load_camera(const std::string& path) {
  json j = parse_file(path);
  if (j.is_array())
    throw std::runtime_error("camera file " + path + ": expected one view, got array");
  return camera_from_json(j, path);
}

std::vector<Camera> load_cameras(const std::string& path) {
  json j = parse_file(path);
  std::vector<Camera> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(camera_from_json(e, path));
  else
    out.push_back(camera_from_json(j, path));
  return out;
}

}  // namespace mvs::io
