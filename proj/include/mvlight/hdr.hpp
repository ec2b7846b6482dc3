#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvlight/common.hpp"

namespace mvlight {

// Linear-radiance environment image, equirectangular layout, row-major,
// 3 channels per pixel. Values are relative radiance, >= 0 and finite.
struct HdrImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // height*width*3

  float& at(int x, int y, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  float max_value() const;
  void validate() const;  // throws NumericError on NaN/Inf or negative values
};

// High/low-frequency split of an HdrImage, both bounded to [0,1].
struct LightComponents {
  int width = 0;
  int height = 0;
  std::vector<float> hf;
  std::vector<float> lf;
};

// Radiance RGBE (.hdr). Pixels decode as channel = mantissa/256 * 2^(E-128),
// with E=0 meaning (0,0,0). Handles both RLE and flat scanlines.
HdrImage decode_rgbe(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_rgbe(const HdrImage& img);

// Raw float32 container for synthetic lights: magic "HDRF", u32 width,
// u32 height (little-endian), then width*height*3 float32.
HdrImage decode_hdrf(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_hdrf(const HdrImage& img);

// Dispatches on magic bytes ("#?" -> RGBE, "HDRF" -> raw).
HdrImage load_hdr(const std::filesystem::path& path);
void save_hdr(const std::filesystem::path& path, const HdrImage& img);  // by extension

// Per-pixel RGBE quantization round trip, used by the codec and tests.
std::array<uint8_t, 4> float_to_rgbe(float r, float g, float b);
std::array<float, 3> rgbe_to_float(uint8_t r, uint8_t g, uint8_t b, uint8_t e);

// hf = log(1+L)/log(1+l_max), lf = (L/(1+L))^(1/2.2), both after clamping L
// to [0, l_max]. l_max must be > 0.
LightComponents decompose(const HdrImage& light, float l_max);

inline constexpr float kDefaultLmax = 16.0f;

}  // namespace mvlight
