#pragma once

#include <string>

#include "mvs/image.hpp"

namespace mvs::io {

// Portable float map, grayscale ("Pf"), scale -1.0 (little-endian payload),
// scanlines stored bottom-to-top per the PFM convention. Invalid pixels are
// encoded as 0.0; the mask is implied by nonzero entries.
void write_pfm(const std::string& path, const DepthMap& map);
DepthMap read_pfm(const std::string& path);

}  // namespace mvs::io
