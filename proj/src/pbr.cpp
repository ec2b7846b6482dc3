#include "mvlight/pbr.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "mvlight/pbr_brdf.hpp"

namespace mvlight {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kLutRes = 32;      // roughness x nov
constexpr int kLutSamples = 256;
constexpr float kLutNovMin = 0.01f;

struct EquirectGrid {
  int width, height;
  std::vector<Vec3> dirs;
  std::vector<float> solid_angle;
};

EquirectGrid make_grid(int width, int height) {
  EquirectGrid g{width, height, {}, {}};
  g.dirs.reserve(static_cast<size_t>(width) * height);
  g.solid_angle.reserve(g.dirs.capacity());
  for (int y = 0; y < height; y++) {
    double theta = kPi * (y + 0.5) / height;
    double sin_t = std::sin(theta), cos_t = std::cos(theta);
    double dw = sin_t * (kPi / height) * (2.0 * kPi / width);
    for (int x = 0; x < width; x++) {
      double phi = 2.0 * kPi * (x + 0.5) / width;
      g.dirs.push_back({static_cast<float>(sin_t * std::cos(phi)), static_cast<float>(cos_t),
                        static_cast<float>(sin_t * std::sin(phi))});
      g.solid_angle.push_back(static_cast<float>(dw));
    }
  }
  return g;
}

float roughness_to_exponent(float r) {
  float alpha = r * r;
  float s = 2.f / (alpha * alpha) - 2.f;
  return clampf(s, 0.f, 2048.f);
}

torch::Tensor tensor_from(const std::vector<float>& v, torch::IntArrayRef shape) {
  return torch::from_blob(const_cast<float*>(v.data()), shape, torch::kFloat32).clone();
}

// Bilinear equirect sample of map [H,W,3] at unit directions [N,3].
// Wraps in azimuth, clamps at the poles. Differentiable.
torch::Tensor equirect_sample(const torch::Tensor& map, const torch::Tensor& dirs) {
  auto dtype = dirs.scalar_type();
  auto m = map.to(dtype);
  int64_t H = m.size(0), W = m.size(1);
  auto x = dirs.select(-1, 0);
  auto y = dirs.select(-1, 1);
  auto z = dirs.select(-1, 2);
  auto theta = torch::acos(torch::clamp(y, -1.0, 1.0));
  auto phi = torch::atan2(z, x);
  phi = torch::where(phi < 0, phi + 2.0 * kPi, phi);
  auto px = phi / (2.0 * kPi) * W - 0.5;
  auto py = theta / kPi * H - 0.5;

  auto x0f = torch::floor(px);
  auto y0f = torch::floor(py);
  auto fx = (px - x0f).unsqueeze(-1);
  auto fy = (py - y0f).unsqueeze(-1);
  auto x0 = x0f.to(torch::kLong);
  auto y0 = y0f.to(torch::kLong);
  auto wrap = [&](torch::Tensor ix) { return ix.remainder(W); };
  auto clampy = [&](torch::Tensor iy) { return torch::clamp(iy, 0, H - 1); };
  auto flat = m.reshape({H * W, 3});
  auto fetch = [&](torch::Tensor ix, torch::Tensor iy) {
    auto idx = clampy(iy) * W + wrap(ix);
    return flat.index_select(0, idx);
  };
  auto v00 = fetch(x0, y0);
  auto v10 = fetch(x0 + 1, y0);
  auto v01 = fetch(x0, y0 + 1);
  auto v11 = fetch(x0 + 1, y0 + 1);
  auto top = v00 * (1 - fx) + v10 * fx;
  auto bot = v01 * (1 - fx) + v11 * fx;
  return top * (1 - fy) + bot * fy;
}

// Interpolated specular level sample, differentiable in roughness.
torch::Tensor spec_level_sample(const EnvLight& env, const torch::Tensor& dirs,
                                const torch::Tensor& roughness) {
  const auto& lr = env.level_roughness;
  const int L = static_cast<int>(lr.size());
  auto r = torch::clamp(roughness, lr.front(), lr.back());
  // Continuous level coordinate, piecewise linear in roughness.
  auto c = torch::zeros_like(r);
  for (int i = 0; i + 1 < L; i++) {
    auto t = (r - lr[i]) / (lr[i + 1] - lr[i]);
    auto seg = torch::clamp(t, 0.0, 1.0);
    c = c + seg;  // accumulates i + fraction once r passes lr[i]
  }
  torch::Tensor out;
  for (int i = 0; i < L; i++) {
    auto w = torch::clamp(1.0 - torch::abs(c - static_cast<double>(i)), 0.0, 1.0).unsqueeze(-1);
    auto lv = equirect_sample(env.spec_levels.select(0, i), dirs);
    out = i == 0 ? lv * w : out + lv * w;
  }
  return out;
}

double radical_inverse_vdc(uint32_t bits) {
  bits = (bits << 16u) | (bits >> 16u);
  bits = ((bits & 0x55555555u) << 1u) | ((bits & 0xAAAAAAAAu) >> 1u);
  bits = ((bits & 0x33333333u) << 2u) | ((bits & 0xCCCCCCCCu) >> 2u);
  bits = ((bits & 0x0F0F0F0Fu) << 4u) | ((bits & 0xF0F0F0F0u) >> 4u);
  bits = ((bits & 0x00FF00FFu) << 8u) | ((bits & 0xFF00FF00u) >> 8u);
  return static_cast<double>(bits) * 2.3283064365386963e-10;
}

// A/B for split-sum: integral of the GGX lobe with Schlick Fresnel split into
// the F0-scale and bias parts, via importance sampling of the half vector.
std::pair<double, double> integrate_brdf(double roughness, double nov) {
  double alpha = roughness * roughness;
  double vx = std::sqrt(std::max(0.0, 1.0 - nov * nov)), vz = nov;
  double A = 0.0, B = 0.0;
  for (int i = 0; i < kLutSamples; i++) {
    double u1 = (i + 0.5) / kLutSamples;
    double u2 = radical_inverse_vdc(static_cast<uint32_t>(i));
    double cos_h = std::sqrt((1.0 - u1) / (1.0 + (alpha * alpha - 1.0) * u1));
    double sin_h = std::sqrt(std::max(0.0, 1.0 - cos_h * cos_h));
    double phi = 2.0 * kPi * u2;
    double hx = sin_h * std::cos(phi), hy = sin_h * std::sin(phi), hz = cos_h;
    double voh = vx * hx + vz * hz;
    double lx = 2.0 * voh * hx - vx;
    double ly = 2.0 * voh * hy;
    double lz = 2.0 * voh * hz - vz;
    (void)ly;
    double nol = lz, noh = hz;
    if (nol <= 0.0 || voh <= 0.0) continue;
    double g = brdf::g_smith_correlated(nov, nol, alpha);
    double g_vis = g * voh / (noh * nov);
    double fc = std::pow(1.0 - voh, 5.0);
    A += (1.0 - fc) * g_vis;
    B += fc * g_vis;
  }
  return {A / kLutSamples, B / kLutSamples};
}

torch::Tensor build_env_brdf_lut() {
  std::vector<float> data(2 * kLutRes * kLutRes);
  for (int ri = 0; ri < kLutRes; ri++) {
    double r = PbrMaterial::kRoughnessFloor +
               (1.0 - PbrMaterial::kRoughnessFloor) * ri / (kLutRes - 1);
    for (int vi = 0; vi < kLutRes; vi++) {
      double nov = kLutNovMin + (1.0 - kLutNovMin) * vi / (kLutRes - 1);
      auto [a, b] = integrate_brdf(r, nov);
      data[(0 * kLutRes + ri) * kLutRes + vi] = static_cast<float>(a);
      data[(1 * kLutRes + ri) * kLutRes + vi] = static_cast<float>(b);
    }
  }
  return tensor_from(data, {2, kLutRes, kLutRes});
}

// Bilinear LUT lookup: returns {A, B}, differentiable in roughness.
std::pair<torch::Tensor, torch::Tensor> lut_lookup(const torch::Tensor& roughness,
                                                   const torch::Tensor& nov) {
  auto dtype = roughness.scalar_type();
  auto lut = env_brdf_lut().to(dtype);
  const double r0 = PbrMaterial::kRoughnessFloor;
  auto rc = (torch::clamp(roughness, r0, 1.0) - r0) / (1.0 - r0) * (kLutRes - 1);
  auto vc = (torch::clamp(nov, kLutNovMin, 1.0) - kLutNovMin) / (1.0 - kLutNovMin) * (kLutRes - 1);
  auto r0f = torch::clamp(torch::floor(rc), 0.0, kLutRes - 2.0);
  auto v0f = torch::clamp(torch::floor(vc), 0.0, kLutRes - 2.0);
  auto fr = rc - r0f;
  auto fv = vc - v0f;
  auto ri = r0f.to(torch::kLong);
  auto vi = v0f.to(torch::kLong);
  auto fetch = [&](int c, torch::Tensor r_idx, torch::Tensor v_idx) {
    auto flat = lut[c].reshape({kLutRes * kLutRes});
    return flat.index_select(0, r_idx * kLutRes + v_idx);
  };
  auto bilerp = [&](int c) {
    auto v00 = fetch(c, ri, vi), v10 = fetch(c, ri + 1, vi);
    auto v01 = fetch(c, ri, vi + 1), v11 = fetch(c, ri + 1, vi + 1);
    return (v00 * (1 - fr) + v10 * fr) * (1 - fv) + (v01 * (1 - fr) + v11 * fr) * fv;
  };
  return {bilerp(0), bilerp(1)};
}

void check_unit_rows(const torch::Tensor& t, const char* what) {
  auto err = (t.norm(2, -1) - 1.0).abs().max().item<double>();
  if (err > 1e-3) throw ArgumentError(std::string(what) + " must be unit length (err > 1e-3)");
}

Vec3 to_vec3(const torch::Tensor& t) {
  auto a = t.to(torch::kFloat32).contiguous();
  const float* p = a.data_ptr<float>();
  return {p[0], p[1], p[2]};
}

void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
  // Duff et al. branchless ONB.
  float sign = n.z >= 0.f ? 1.f : -1.f;
  float a = -1.f / (sign + n.z);
  float bb = n.x * n.y * a;
  t = {1.f + sign * n.x * n.x * a, sign * bb, -sign * n.x};
  b = {bb, sign + n.y * n.y * a, -n.y};
}

}  // namespace

const torch::Tensor& env_brdf_lut() {
  static torch::Tensor lut = build_env_brdf_lut();
  return lut;
}

EnvLight prefilter(const HdrImage& light) {
  light.validate();
  EnvLight env;
  env.source_hash = fnv1a64(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(light.pixels.data()), light.pixels.size() * sizeof(float)));

  EquirectGrid src = make_grid(light.width, light.height);
  const float* L = light.pixels.data();
  const size_t n_src = src.dirs.size();

  // Diffuse irradiance / pi on an 16x8 grid.
  {
    const int W = 16, H = 8;
    EquirectGrid out = make_grid(W, H);
    std::vector<float> diffuse(static_cast<size_t>(W) * H * 3, 0.f);
    for (size_t o = 0; o < out.dirs.size(); o++) {
      const Vec3 n = out.dirs[o];
      double acc[3] = {0, 0, 0};
      for (size_t s = 0; s < n_src; s++) {
        float c = dot(n, src.dirs[s]);
        if (c <= 0.f) continue;
        double w = static_cast<double>(c) * src.solid_angle[s];
        acc[0] += w * L[3 * s];
        acc[1] += w * L[3 * s + 1];
        acc[2] += w * L[3 * s + 2];
      }
      for (int ch = 0; ch < 3; ch++)
        diffuse[3 * o + ch] = static_cast<float>(acc[ch] / kPi);
    }
    env.diffuse = tensor_from(diffuse, {H, W, 3});
  }

  // Normalized cosine-power blurs on a 32x16 grid per roughness level.
  {
    const int W = 32, H = 16;
    const int n_levels = static_cast<int>(env.level_roughness.size());
    EquirectGrid out = make_grid(W, H);
    std::vector<float> levels(static_cast<size_t>(n_levels) * W * H * 3, 0.f);
    for (int l = 0; l < n_levels; l++) {
      float s_exp = roughness_to_exponent(env.level_roughness[l]);
      float* dst = levels.data() + static_cast<size_t>(l) * W * H * 3;
      for (size_t o = 0; o < out.dirs.size(); o++) {
        const Vec3 r = out.dirs[o];
        double acc[3] = {0, 0, 0};
        double norm = 0.0;
        for (size_t s = 0; s < n_src; s++) {
          float c = dot(r, src.dirs[s]);
          if (c <= 0.f) continue;
          double w = std::pow(static_cast<double>(c), static_cast<double>(s_exp)) *
                     src.solid_angle[s];
          norm += w;
          acc[0] += w * L[3 * s];
          acc[1] += w * L[3 * s + 1];
          acc[2] += w * L[3 * s + 2];
        }
        for (int ch = 0; ch < 3; ch++)
          dst[3 * o + ch] = norm > 0.0 ? static_cast<float>(acc[ch] / norm) : 0.f;
      }
    }
    env.spec_levels = tensor_from(levels, {n_levels, H, W, 3});
  }
  return env;
}

torch::Tensor shade(torch::Tensor albedo, torch::Tensor roughness, torch::Tensor metallic,
                    torch::Tensor n, torch::Tensor v, const EnvLight& env, bool check_units) {
  if (check_units) {
    check_unit_rows(n, "shade: n");
    check_unit_rows(v, "shade: v");
  }
  auto ndotv = (n * v).sum(-1);
  auto nov = torch::clamp(ndotv, 1e-4, 1.0);
  auto refl = n * (2.0 * ndotv).unsqueeze(-1) - v;
  refl = refl / torch::clamp(refl.norm(2, -1, true), 1e-8);

  auto diff_irr = equirect_sample(env.diffuse, n);
  auto spec_rad = spec_level_sample(env, refl, roughness);
  auto [A, B] = lut_lookup(roughness, nov);

  auto m3 = metallic.unsqueeze(-1);
  auto f0 = 0.04 * (1.0 - m3) + albedo * m3;
  auto S = torch::clamp(f0 * A.unsqueeze(-1) + B.unsqueeze(-1), 0.0, 1.0);
  auto kd = (1.0 - m3) * (1.0 - S);
  return kd * albedo * diff_irr + spec_rad * S;
}

Vec3 shade_point(const PbrMaterial& m, Vec3 n, Vec3 v, const EnvLight& env) {
  auto t = [&](std::initializer_list<float> vals, torch::IntArrayRef shape) {
    return torch::tensor(std::vector<float>(vals), torch::kFloat32).reshape(shape);
  };
  auto out = shade(t({m.albedo.x, m.albedo.y, m.albedo.z}, {1, 3}), t({m.roughness}, {1}),
                   t({m.metallic}, {1}), t({n.x, n.y, n.z}, {1, 3}), t({v.x, v.y, v.z}, {1, 3}),
                   env);
  return to_vec3(out[0]);
}

Vec3 sample_equirect(const HdrImage& img, Vec3 dir) {
  dir = normalized(dir);
  float theta = std::acos(clampf(dir.y, -1.f, 1.f));
  float phi = std::atan2(dir.z, dir.x);
  if (phi < 0) phi += static_cast<float>(2.0 * kPi);
  float px = phi / static_cast<float>(2.0 * kPi) * img.width - 0.5f;
  float py = theta / static_cast<float>(kPi) * img.height - 0.5f;
  int x0 = static_cast<int>(std::floor(px));
  int y0 = static_cast<int>(std::floor(py));
  float fx = px - x0, fy = py - y0;
  auto wrap = [&](int x) { return ((x % img.width) + img.width) % img.width; };
  auto clampy = [&](int y) { return y < 0 ? 0 : (y >= img.height ? img.height - 1 : y); };
  Vec3 out{0, 0, 0};
  for (int c = 0; c < 3; c++) {
    float v00 = img.at(wrap(x0), clampy(y0), c);
    float v10 = img.at(wrap(x0 + 1), clampy(y0), c);
    float v01 = img.at(wrap(x0), clampy(y0 + 1), c);
    float v11 = img.at(wrap(x0 + 1), clampy(y0 + 1), c);
    out[c] = (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
  }
  return out;
}

Vec3 shade_reference(const PbrMaterial& m, Vec3 n, Vec3 v, const HdrImage& light, int n_samples,
                     uint64_t seed) {
  if (n_samples < 1) throw ArgumentError("shade_reference: n_samples must be >= 1");
  light.validate();
  const double alpha = static_cast<double>(m.roughness) * m.roughness;
  const double nov = std::max(1e-4, static_cast<double>(dot(n, v)));
  const double f0[3] = {0.04 * (1.0 - m.metallic) + m.albedo.x * m.metallic,
                        0.04 * (1.0 - m.metallic) + m.albedo.y * m.metallic,
                        0.04 * (1.0 - m.metallic) + m.albedo.z * m.metallic};

  Vec3 t, b;
  orthonormal_basis(n, t, b);
  auto cosine_dir = [&](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u1 = uni(rng), u2 = uni(rng);
    double r = std::sqrt(u1), phi = 2.0 * kPi * u2;
    double lx = r * std::cos(phi), ly = r * std::sin(phi), lz = std::sqrt(1.0 - u1);
    return normalized(t * static_cast<float>(lx) + b * static_cast<float>(ly) +
                      n * static_cast<float>(lz));
  };
  auto spec_brdf = [&](const Vec3& l, double fres[3]) -> double {
    Vec3 h = normalized(l + v);
    double nol = std::max(0.0, static_cast<double>(dot(n, l)));
    double noh = std::max(0.0, static_cast<double>(dot(n, h)));
    double voh = std::max(0.0, static_cast<double>(dot(v, h)));
    if (nol <= 0.0 || voh <= 0.0) return 0.0;
    double d = brdf::d_ggx(noh, alpha);
    double g = brdf::g_smith_correlated(nov, nol, alpha);
    for (int c = 0; c < 3; c++) fres[c] = brdf::fresnel_schlick(f0[c], voh);
    return d * g / (4.0 * nov * nol);
  };

  // Pass 1: specular directional albedo S (per channel) by the same
  // cosine-weighted estimator, integrand f_spec * cos / pdf = pi * f_spec.
  double S[3] = {0, 0, 0};
  {
    std::mt19937_64 rng(seed ^ 0x51ed2701a3c5e1b7ull);
    for (int i = 0; i < n_samples; i++) {
      Vec3 l = cosine_dir(rng);
      double fres[3];
      double fs = spec_brdf(l, fres);
      for (int c = 0; c < 3; c++) S[c] += kPi * fs * fres[c];
    }
    for (double& s : S) s = std::min(1.0, s / n_samples);
  }

  const double kd[3] = {(1.0 - m.metallic) * (1.0 - S[0]), (1.0 - m.metallic) * (1.0 - S[1]),
                        (1.0 - m.metallic) * (1.0 - S[2])};
  const double rho_d[3] = {kd[0] * m.albedo.x / kPi, kd[1] * m.albedo.y / kPi,
                           kd[2] * m.albedo.z / kPi};

  double acc[3] = {0, 0, 0};
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_samples; i++) {
    Vec3 l = cosine_dir(rng);
    double fres[3];
    double fs = spec_brdf(l, fres);
    Vec3 radiance = sample_equirect(light, l);
    for (int c = 0; c < 3; c++) acc[c] += kPi * (rho_d[c] + fs * fres[c]) * radiance[c];
  }
  return {static_cast<float>(acc[0] / n_samples), static_cast<float>(acc[1] / n_samples),
          static_cast<float>(acc[2] / n_samples)};
}

void save_env_light(const std::filesystem::path& path, const EnvLight& env) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  auto write_u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto write_map = [&](const torch::Tensor& t) {
    HdrImage img;
    img.height = static_cast<int>(t.size(0));
    img.width = static_cast<int>(t.size(1));
    auto c = t.contiguous();
    img.pixels.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
    auto bytes = encode_hdrf(img);
    write_u32(static_cast<uint32_t>(bytes.size()));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  };
  f.write("MVEL", 4);
  write_u32(1);  // version
  uint64_t h = env.source_hash;
  f.write(reinterpret_cast<const char*>(&h), 8);
  write_u32(static_cast<uint32_t>(env.level_roughness.size()));
  for (float r : env.level_roughness) f.write(reinterpret_cast<const char*>(&r), 4);
  write_map(env.diffuse);
  for (int64_t l = 0; l < env.spec_levels.size(0); l++) write_map(env.spec_levels[l]);
  if (!f) throw IoError("short write to " + path.string());
}

EnvLight load_env_light(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "MVEL", 4) != 0) throw FormatError("not an EnvLight cache");
  auto read_u32 = [&]() {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f) throw TruncationError("truncated EnvLight cache");
    return v;
  };
  uint32_t version = read_u32();
  if (version != 1) throw FormatError("unsupported EnvLight cache version");
  EnvLight env;
  f.read(reinterpret_cast<char*>(&env.source_hash), 8);
  uint32_t n_levels = read_u32();
  env.level_roughness.resize(n_levels);
  f.read(reinterpret_cast<char*>(env.level_roughness.data()), 4 * n_levels);
  auto read_map = [&]() {
    uint32_t len = read_u32();
    std::vector<uint8_t> bytes(len);
    f.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!f) throw TruncationError("truncated EnvLight cache");
    HdrImage img = decode_hdrf(bytes);
    return tensor_from(img.pixels, {img.height, img.width, 3});
  };
  env.diffuse = read_map();
  std::vector<torch::Tensor> levels;
  for (uint32_t l = 0; l < n_levels; l++) levels.push_back(read_map());
  env.spec_levels = torch::stack(levels, 0);
  return env;
}

}  // namespace mvlight
