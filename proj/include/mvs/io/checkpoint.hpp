#pragma once

#include <map>
#include <string>

#include "mvs/tensor.hpp"

namespace mvs::io {

// Self-describing binary tensor archive:
//   magic "MVSP", version u32, entry count u32, then per entry
//   (name length u32, name bytes, rank u32, extents u64..., float64 payload),
// all little-endian. Parameters, optimizer moments, and RNG state share the
// format under reserved name prefixes ("opt.", "rng.", "meta.").
void save_tensor_archive(const std::string& path,
                         const std::map<std::string, Tensor>& entries);

std::map<std::string, Tensor> load_tensor_archive(const std::string& path);

inline constexpr uint32_t kCheckpointVersion = 1;

}  // namespace mvs::io
