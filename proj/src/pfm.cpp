#include "mvs/io/pfm.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace mvs::io {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::istream& is,
                             const std::string& what) {
  const auto off = static_cast<long>(is.tellg());
  throw std::runtime_error("PFM parse error in " + path + " at byte offset " +
                           std::to_string(off) + ": " + what);
}

// Header tokens are separated by single whitespace; the final token is
// followed by exactly one whitespace byte before the raster.
std::string next_token(std::istream& is, const std::string& path) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF && (c == ' ' || c == '\n' || c == '\r' || c == '\t')) {
  }
  if (c == EOF) parse_fail(path, is, "unexpected end of header");
  do {
    tok.push_back(static_cast<char>(c));
    c = is.get();
  } while (c != EOF && c != ' ' && c != '\n' && c != '\r' && c != '\t');
  return tok;
}

}  // namespace

void write_pfm(const std::string& path, const DepthMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("PFM: cannot open for write: " + path);
  os << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
  std::vector<unsigned char> row(static_cast<size_t>(map.width) * 4);
  for (int r = map.height - 1; r >= 0; --r) {  // bottom-up raster
    for (int c = 0; c < map.width; ++c) {
      const float v = map.is_valid(r, c) ? static_cast<float>(map.at(r, c)) : 0.0f;
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int k = 0; k < 4; ++k)
        row[static_cast<size_t>(c) * 4 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<long>(row.size()));
  }
  if (!os) throw std::runtime_error("PFM: write failed: " + path);
}

DepthMap read_pfm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("PFM: cannot open: " + path);
  const std::string kind = next_token(is, path);
  if (kind != "Pf") parse_fail(path, is, "expected grayscale magic 'Pf', got '" + kind + "'");
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(next_token(is, path));
    height = std::stoi(next_token(is, path));
    scale = std::stod(next_token(is, path));
  } catch (const std::exception&) {
    parse_fail(path, is, "malformed dimensions or scale");
  }
  if (width <= 0 || height <= 0) parse_fail(path, is, "non-positive dimensions");
  const bool little_endian = scale < 0.0;
  DepthMap map(width, height);
  std::vector<unsigned char> row(static_cast<size_t>(width) * 4);
  for (int r = height - 1; r >= 0; --r) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<long>(row.size()));
    if (!is) parse_fail(path, is, "truncated raster");
    for (int c = 0; c < width; ++c) {
      uint32_t bits = 0;
      if (little_endian) {
        for (int k = 0; k < 4; ++k)
          bits |= static_cast<uint32_t>(row[static_cast<size_t>(c) * 4 + k]) << (8 * k);
      } else {
        for (int k = 0; k < 4; ++k)
          bits = (bits << 8) | row[static_cast<size_t>(c) * 4 + k];
      }
      float v;
      std::memcpy(&v, &bits, 4);
      if (v != 0.0f) map.set(r, c, static_cast<double>(v));
    }
  }
  return map;
}

}  // namespace mvs::io
