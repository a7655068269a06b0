#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mvs {

// RGB image, row-major H*W*3, values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0.0) {}

  double& at(int row, int col, int c) {
    return rgb[(static_cast<size_t>(row) * width + col) * 3 + c];
  }
  double at(int row, int col, int c) const {
    return rgb[(static_cast<size_t>(row) * width + col) * 3 + c];
  }
};

// Per-pixel metric depth with validity. Valid entries are positive and finite.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        values(static_cast<size_t>(w) * h, 0.0),
        valid(static_cast<size_t>(w) * h, 0) {}

  size_t idx(int row, int col) const { return static_cast<size_t>(row) * width + col; }
  double& at(int row, int col) { return values[idx(row, col)]; }
  double at(int row, int col) const { return values[idx(row, col)]; }
  bool is_valid(int row, int col) const { return valid[idx(row, col)] != 0; }
  void set(int row, int col, double v) {
    values[idx(row, col)] = v;
    valid[idx(row, col)] = 1;
  }
  size_t valid_count() const {
    size_t n = 0;
    for (uint8_t v : valid) n += v != 0;
    return n;
  }
};

}  // namespace mvs
