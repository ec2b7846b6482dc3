#include "mvlight/hdr.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvlight {

namespace {

struct ByteReader {
  std::span<const uint8_t> data;
  size_t pos = 0;

  bool eof() const { return pos >= data.size(); }
  uint8_t next() {
    if (eof()) throw TruncationError("unexpected end of RGBE stream");
    return data[pos++];
  }
  void take(uint8_t* dst, size_t n) {
    if (pos + n > data.size()) throw TruncationError("truncated RGBE scanline");
    std::memcpy(dst, data.data() + pos, n);
    pos += n;
  }
  std::string line() {
    std::string out;
    while (true) {
      if (eof()) throw TruncationError("unexpected end of RGBE header");
      char c = static_cast<char>(data[pos++]);
      if (c == '\n') break;
      out.push_back(c);
    }
    return out;
  }
};

void decode_pixel(const uint8_t rgbe[4], float* out) {
  auto v = rgbe_to_float(rgbe[0], rgbe[1], rgbe[2], rgbe[3]);
  out[0] = v[0];
  out[1] = v[1];
  out[2] = v[2];
}

// Flat scanline reader; also handles the legacy (1,1,1,count) repeat marker.
void read_flat_scanline(ByteReader& r, float* row, int width) {
  int x = 0;
  int shift = 0;
  uint8_t prev[4] = {0, 0, 0, 0};
  bool have_prev = false;
  while (x < width) {
    uint8_t px[4];
    r.take(px, 4);
    if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
      if (!have_prev) throw FormatError("RGBE legacy repeat with no previous pixel");
      int count = px[3] << shift;
      if (x + count > width) throw FormatError("RGBE legacy repeat overruns scanline");
      for (int i = 0; i < count; i++) decode_pixel(prev, row + 3 * (x + i));
      x += count;
      shift += 8;
    } else {
      decode_pixel(px, row + 3 * x);
      std::memcpy(prev, px, 4);
      have_prev = true;
      shift = 0;
      x++;
    }
  }
}

void read_rle_components(ByteReader& r, std::vector<uint8_t>& buf, int width) {
  for (int c = 0; c < 4; c++) {
    int x = 0;
    while (x < width) {
      uint8_t code = r.next();
      if (code > 128) {
        int count = code - 128;
        if (x + count > width) throw FormatError("RGBE run overruns scanline");
        uint8_t value = r.next();
        for (int i = 0; i < count; i++) buf[4 * (x + i) + c] = value;
        x += count;
      } else {
        int count = code;
        if (count == 0) throw FormatError("RGBE zero-length literal run");
        if (x + count > width) throw FormatError("RGBE literal run overruns scanline");
        for (int i = 0; i < count; i++) buf[4 * (x + i) + c] = r.next();
        x += count;
      }
    }
  }
}

void write_rle_component(std::vector<uint8_t>& out, const std::vector<uint8_t>& data) {
  const int n = static_cast<int>(data.size());
  int x = 0;
  while (x < n) {
    // Find a run of >= 4 identical bytes.
    int run_start = x;
    int run_len = 0;
    while (run_start < n) {
      run_len = 1;
      while (run_start + run_len < n && run_len < 127 &&
             data[run_start + run_len] == data[run_start])
        run_len++;
      if (run_len >= 4) break;
      run_start += run_len;
    }
    if (run_start >= n || run_len < 4) run_start = n;
    // Emit literals up to the run.
    int lit = run_start - x;
    while (lit > 0) {
      int chunk = lit > 128 ? 128 : lit;
      out.push_back(static_cast<uint8_t>(chunk));
      out.insert(out.end(), data.begin() + x, data.begin() + x + chunk);
      x += chunk;
      lit -= chunk;
    }
    if (run_start < n) {
      out.push_back(static_cast<uint8_t>(128 + run_len));
      out.push_back(data[run_start]);
      x = run_start + run_len;
    }
  }
}

uint32_t read_u32le(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

void push_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

}  // namespace

float HdrImage::max_value() const {
  float m = 0.f;
  for (float v : pixels) m = std::max(m, v);
  return m;
}

void HdrImage::validate() const {
  if (width <= 0 || height <= 0) throw FormatError("HdrImage has non-positive dimensions");
  if (pixels.size() != static_cast<size_t>(width) * height * 3)
    throw FormatError("HdrImage pixel buffer size mismatch");
  for (float v : pixels) {
    if (!std::isfinite(v)) throw NumericError("HdrImage contains non-finite values");
    if (v < 0.f) throw NumericError("HdrImage contains negative radiance");
  }
}

std::array<float, 3> rgbe_to_float(uint8_t r, uint8_t g, uint8_t b, uint8_t e) {
  if (e == 0) return {0.f, 0.f, 0.f};
  float scale = std::ldexp(1.f / 256.f, static_cast<int>(e) - 128);
  return {r * scale, g * scale, b * scale};
}

std::array<uint8_t, 4> float_to_rgbe(float r, float g, float b) {
  float m = std::max(r, std::max(g, b));
  if (m < 1e-32f) return {0, 0, 0, 0};
  int e;
  std::frexp(m, &e);
  float scale = std::ldexp(256.f, -e);
  return {static_cast<uint8_t>(r * scale), static_cast<uint8_t>(g * scale),
          static_cast<uint8_t>(b * scale), static_cast<uint8_t>(e + 128)};
}

HdrImage decode_rgbe(std::span<const uint8_t> bytes) {
  ByteReader r{bytes};
  std::string magic = r.line();
  if (magic.rfind("#?RADIANCE", 0) != 0 && magic.rfind("#?RGBE", 0) != 0)
    throw FormatError("not a Radiance RGBE stream (bad magic)");
  // Header lines until the blank separator.
  while (true) {
    std::string l = r.line();
    if (l.empty()) break;
    if (l.rfind("FORMAT=", 0) == 0 && l != "FORMAT=32-bit_rle_rgbe")
      throw FormatError("unsupported RGBE FORMAT: " + l);
  }
  std::string res = r.line();
  int w = 0, h = 0;
  if (std::sscanf(res.c_str(), "-Y %d +X %d", &h, &w) != 2)
    throw FormatError("unsupported RGBE resolution line: " + res);
  if (w <= 0 || h <= 0) throw FormatError("RGBE dimensions must be positive");

  HdrImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<size_t>(w) * h * 3, 0.f);
  std::vector<uint8_t> rle(static_cast<size_t>(w) * 4);

  for (int y = 0; y < h; y++) {
    float* row = img.pixels.data() + static_cast<size_t>(y) * w * 3;
    if (w < 8 || w > 0x7fff) {
      read_flat_scanline(r, row, w);
      continue;
    }
    uint8_t head[4];
    r.take(head, 4);
    if (head[0] == 2 && head[1] == 2 && ((head[2] << 8) | head[3]) == w) {
      read_rle_components(r, rle, w);
      for (int x = 0; x < w; x++) {
        uint8_t px[4] = {rle[4 * x], rle[4 * x + 1], rle[4 * x + 2], rle[4 * x + 3]};
        decode_pixel(px, row + 3 * x);
      }
    } else {
      // Flat scanline; the four bytes already read are the first pixel.
      decode_pixel(head, row);
      if (head[0] == 1 && head[1] == 1 && head[2] == 1)
        throw FormatError("RGBE legacy repeat at scanline start");
      int x = 1;
      int shift = 0;
      uint8_t prev[4];
      std::memcpy(prev, head, 4);
      while (x < w) {
        uint8_t px[4];
        r.take(px, 4);
        if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
          int count = px[3] << shift;
          if (x + count > w) throw FormatError("RGBE legacy repeat overruns scanline");
          for (int i = 0; i < count; i++) decode_pixel(prev, row + 3 * (x + i));
          x += count;
          shift += 8;
        } else {
          decode_pixel(px, row + 3 * x);
          std::memcpy(prev, px, 4);
          shift = 0;
          x++;
        }
      }
    }
  }
  img.validate();
  return img;
}

std::vector<uint8_t> encode_rgbe(const HdrImage& img) {
  img.validate();
  std::vector<uint8_t> out;
  std::ostringstream hdr;
  hdr << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height << " +X " << img.width << "\n";
  std::string h = hdr.str();
  out.insert(out.end(), h.begin(), h.end());

  const int w = img.width;
  const bool rle = w >= 8 && w <= 0x7fff;
  std::vector<uint8_t> comp[4];
  for (int y = 0; y < img.height; y++) {
    const float* row = img.pixels.data() + static_cast<size_t>(y) * w * 3;
    if (!rle) {
      for (int x = 0; x < w; x++) {
        auto px = float_to_rgbe(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
        out.insert(out.end(), px.begin(), px.end());
      }
      continue;
    }
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<uint8_t>(w >> 8));
    out.push_back(static_cast<uint8_t>(w & 0xff));
    for (int c = 0; c < 4; c++) comp[c].assign(w, 0);
    for (int x = 0; x < w; x++) {
      auto px = float_to_rgbe(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
      for (int c = 0; c < 4; c++) comp[c][x] = px[c];
    }
    for (int c = 0; c < 4; c++) write_rle_component(out, comp[c]);
  }
  return out;
}

HdrImage decode_hdrf(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "HDRF", 4) != 0)
    throw FormatError("not an HDRF stream");
  uint32_t w = read_u32le(bytes, 4);
  uint32_t h = read_u32le(bytes, 8);
  if (w == 0 || h == 0) throw FormatError("HDRF dimensions must be positive");
  size_t need = 12 + static_cast<size_t>(w) * h * 3 * sizeof(float);
  if (bytes.size() < need) throw TruncationError("truncated HDRF payload");
  HdrImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  std::memcpy(img.pixels.data(), bytes.data() + 12, img.pixels.size() * sizeof(float));
  img.validate();
  return img;
}

std::vector<uint8_t> encode_hdrf(const HdrImage& img) {
  img.validate();
  std::vector<uint8_t> out;
  out.reserve(12 + img.pixels.size() * sizeof(float));
  out.insert(out.end(), {'H', 'D', 'R', 'F'});
  push_u32le(out, static_cast<uint32_t>(img.width));
  push_u32le(out, static_cast<uint32_t>(img.height));
  size_t off = out.size();
  out.resize(off + img.pixels.size() * sizeof(float));
  std::memcpy(out.data() + off, img.pixels.data(), img.pixels.size() * sizeof(float));
  return out;
}

HdrImage load_hdr(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "HDRF", 4) == 0)
    return decode_hdrf(bytes);
  return decode_rgbe(bytes);
}

void save_hdr(const std::filesystem::path& path, const HdrImage& img) {
  std::vector<uint8_t> bytes =
      path.extension() == ".raw" ? encode_hdrf(img) : encode_rgbe(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

LightComponents decompose(const HdrImage& light, float l_max) {
  if (!(l_max > 0.f)) throw ArgumentError("l_max must be positive");
  light.validate();
  LightComponents out;
  out.width = light.width;
  out.height = light.height;
  out.hf.resize(light.pixels.size());
  out.lf.resize(light.pixels.size());
  const float inv_log = 1.f / std::log1p(l_max);
  constexpr float kInvGamma = 1.f / 2.2f;
  for (size_t i = 0; i < light.pixels.size(); i++) {
    float v = std::min(light.pixels[i], l_max);
    out.hf[i] = std::log1p(v) * inv_log;
    out.lf[i] = std::pow(v / (1.f + v), kInvGamma);
  }
  return out;
}

}  // namespace mvlight
