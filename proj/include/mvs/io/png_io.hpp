#pragma once

#include <string>

#include "mvs/image.hpp"

namespace mvs::io {

// 8-bit RGB PNG. Values are clamped to [0,1] and quantized with rounding on
// write; read returns v/255.0, so write-then-read is exact for images whose
// channels are multiples of 1/255.
void write_png(const std::string& path, const Image& image);
Image read_png(const std::string& path);

// Quantize an image to the 8-bit grid (what a PNG round trip preserves).
Image quantize8(const Image& image);

}  // namespace mvs::io
