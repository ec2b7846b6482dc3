#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvlight {

// 8-bit image buffer, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> data;
};

void write_png(const std::filesystem::path& path, const Image8& img);
Image8 read_png(const std::filesystem::path& path);

// [0,1] float <-> 8-bit with round-to-nearest.
uint8_t to_u8(float v);

}  // namespace mvlight
