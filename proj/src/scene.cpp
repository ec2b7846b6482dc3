#include "mvlight/scene.hpp"

#include <cmath>
#include <random>

namespace mvlight {

namespace {

constexpr float kPi = 3.14159265358979323846f;

float deg2rad(float d) { return d * kPi / 180.f; }

float uniform(std::mt19937_64& rng, float lo, float hi) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Sphere: return "sphere";
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
  }
  return "sphere";
}

const std::vector<PaletteEntry>& color_palette() {
  static const std::vector<PaletteEntry> palette = {
      {"red", {0.80f, 0.10f, 0.10f}},    {"green", {0.10f, 0.65f, 0.15f}},
      {"blue", {0.12f, 0.20f, 0.80f}},   {"yellow", {0.85f, 0.78f, 0.10f}},
      {"orange", {0.90f, 0.45f, 0.08f}}, {"purple", {0.55f, 0.15f, 0.70f}},
      {"white", {0.90f, 0.90f, 0.90f}},  {"gray", {0.45f, 0.45f, 0.45f}},
      {"cyan", {0.10f, 0.70f, 0.75f}},   {"magenta", {0.85f, 0.15f, 0.65f}},
      {"brown", {0.45f, 0.27f, 0.12f}},  {"black", {0.05f, 0.05f, 0.05f}},
  };
  return palette;
}

const char* material_adjective(const PbrMaterial& m) {
  if (m.metallic > 0.5f) return "metallic";
  if (m.roughness < 0.5f) return "glossy";
  return "matte";
}

namespace {

const char* nearest_color_name(const Vec3& albedo) {
  const auto& palette = color_palette();
  float best = 1e30f;
  const char* name = palette.front().name;
  for (const auto& e : palette) {
    Vec3 d = albedo - e.albedo;
    float dist = dot(d, d);
    if (dist < best) {
      best = dist;
      name = e.name;
    }
  }
  return name;
}

}  // namespace

std::string caption_for(const std::vector<Primitive>& primitives) {
  std::string caption;
  for (size_t i = 0; i < primitives.size(); i++) {
    const Primitive& p = primitives[i];
    if (i > 0) caption += " and ";
    caption += "a ";
    caption += nearest_color_name(p.material.albedo);
    caption += ' ';
    caption += material_adjective(p.material);
    caption += ' ';
    caption += shape_name(p.shape);
  }
  return caption;
}

SceneSpec sample_scene(uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5ce9e5a2c7b1f3dull);
  SceneSpec spec;
  spec.seed = seed;

  float u = uniform(rng, 0.f, 1.f);
  int n_prims = u < 0.5f ? 1 : (u < 0.8f ? 2 : 3);

  for (int i = 0; i < n_prims; i++) {
    Primitive prim;
    prim.shape = static_cast<Shape>(uniform_int(rng, 0, 2));

    float base = uniform(rng, 0.16f, 0.30f);
    if (prim.shape == Shape::Sphere) {
      prim.scale = {base, base, base};
    } else {
      prim.scale = {base * uniform(rng, 0.75f, 1.25f), base * uniform(rng, 0.75f, 1.25f),
                    base * uniform(rng, 0.75f, 1.25f)};
      prim.scale = {clampf(prim.scale.x, 0.10f, 0.38f), clampf(prim.scale.y, 0.10f, 0.38f),
                    clampf(prim.scale.z, 0.10f, 0.38f)};
    }
    for (int a = 0; a < 3; a++) {
      float margin = 0.5f - prim.scale[a];
      prim.center[a] = n_prims == 1 ? 0.f : uniform(rng, -margin, margin);
    }

    const auto& palette = color_palette();
    Vec3 albedo = palette[uniform_int(rng, 0, static_cast<int>(palette.size()) - 1)].albedo;
    float mclass = uniform(rng, 0.f, 1.f);
    float rough, metal;
    if (mclass < 0.45f) {  // matte
      rough = uniform(rng, 0.65f, 0.95f);
      metal = uniform(rng, 0.f, 0.05f);
    } else if (mclass < 0.75f) {  // glossy
      rough = uniform(rng, 0.15f, 0.35f);
      metal = uniform(rng, 0.f, 0.05f);
    } else {  // metallic
      rough = uniform(rng, 0.25f, 0.45f);
      metal = uniform(rng, 0.90f, 1.f);
    }
    prim.material = PbrMaterial::make(albedo, rough, metal);
    spec.primitives.push_back(prim);
  }

  spec.caption = caption_for(spec.primitives);
  return spec;
}

Vec3 CameraPose::eye() const {
  // t = -R*eye  =>  eye = -R^T t
  Vec3 t{extrinsic[3], extrinsic[7], extrinsic[11]};
  Vec3 r = right(), u = up(), b = back();
  return -Vec3{r.x * t.x + u.x * t.y + b.x * t.z, r.y * t.x + u.y * t.y + b.y * t.z,
               r.z * t.x + u.z * t.y + b.z * t.z};
}

void CameraPose::pixel_ray(float px, float py, int width, int height, Vec3& origin,
                           Vec3& dir) const {
  float tan_half = std::tan(deg2rad(fov_y_deg) * 0.5f);
  float aspect = static_cast<float>(width) / static_cast<float>(height);
  float ndc_x = ((px + 0.5f) / width * 2.f - 1.f) * tan_half * aspect;
  float ndc_y = (1.f - (py + 0.5f) / height * 2.f) * tan_half;
  Vec3 d_cam{ndc_x, ndc_y, -1.f};
  Vec3 r = right(), u = up(), b = back();
  // world dir = R^T * d_cam
  dir = normalized(Vec3{r.x * d_cam.x + u.x * d_cam.y + b.x * d_cam.z,
                        r.y * d_cam.x + u.y * d_cam.y + b.y * d_cam.z,
                        r.z * d_cam.x + u.z * d_cam.y + b.z * d_cam.z});
  origin = eye();
}

float CameraPose::rotation_orthonormality_error() const {
  Vec3 rows[3] = {right(), up(), back()};
  float err = 0.f;
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++) {
      float g = dot(rows[i], rows[j]) - (i == j ? 1.f : 0.f);
      err = std::max(err, std::fabs(g));
    }
  return err;
}

CameraPose look_at_camera(Vec3 eye, Vec3 target, float fov_y_deg) {
  Vec3 fwd = normalized(target - eye);
  if (length(fwd) == 0.f) throw ArgumentError("look_at_camera: eye coincides with target");
  Vec3 world_up{0.f, 1.f, 0.f};
  if (std::fabs(dot(fwd, world_up)) > 0.999f) world_up = {0.f, 0.f, 1.f};
  Vec3 back = -fwd;
  Vec3 right = normalized(cross(world_up, back));
  Vec3 up = cross(back, right);

  CameraPose pose;
  pose.fov_y_deg = fov_y_deg;
  auto& e = pose.extrinsic;
  e = {right.x, right.y, right.z, -dot(right, eye),
       up.x,    up.y,    up.z,    -dot(up, eye),
       back.x,  back.y,  back.z,  -dot(back, eye),
       0.f,     0.f,     0.f,     1.f};
  return pose;
}

std::vector<CameraPose> orbit_cameras(int n, float elevation_deg, float radius,
                                      float azimuth0_deg, float fov_y_deg) {
  if (n < 1) throw ArgumentError("orbit_cameras: n must be >= 1");
  if (!(radius > 0.f)) throw ArgumentError("orbit_cameras: radius must be positive");
  std::vector<CameraPose> cams;
  cams.reserve(n);
  float e = deg2rad(elevation_deg);
  for (int i = 0; i < n; i++) {
    float a = deg2rad(azimuth0_deg + 360.f * i / n);
    Vec3 eye{radius * std::cos(e) * std::cos(a), radius * std::sin(e),
             radius * std::cos(e) * std::sin(a)};
    cams.push_back(look_at_camera(eye, {0.f, 0.f, 0.f}, fov_y_deg));
  }
  return cams;
}

HdrImage make_synthetic_light(uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  HdrImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<size_t>(width) * height * 3, 0.f);

  Vec3 top{uniform(rng, 0.15f, 0.6f), uniform(rng, 0.15f, 0.6f), uniform(rng, 0.2f, 0.7f)};
  Vec3 bottom{uniform(rng, 0.05f, 0.3f), uniform(rng, 0.05f, 0.3f), uniform(rng, 0.05f, 0.25f)};

  struct Lobe {
    Vec3 dir;
    Vec3 color;
    float sharpness;
  };
  std::vector<Lobe> lobes;
  int n_lobes = uniform_int(rng, 1, 3);
  for (int i = 0; i < n_lobes; i++) {
    float az = uniform(rng, 0.f, 2.f * kPi);
    float el = std::asin(uniform(rng, -0.2f, 0.95f));
    Vec3 dir{std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az)};
    float intensity = uniform(rng, 3.f, 14.f);
    Vec3 tint{uniform(rng, 0.7f, 1.f), uniform(rng, 0.7f, 1.f), uniform(rng, 0.7f, 1.f)};
    float sigma = uniform(rng, 0.18f, 0.5f);
    lobes.push_back({dir, tint * intensity, 1.f / (2.f * sigma * sigma)});
  }

  for (int y = 0; y < height; y++) {
    float theta = kPi * (y + 0.5f) / height;  // 0 at +Y pole
    for (int x = 0; x < width; x++) {
      float phi = 2.f * kPi * (x + 0.5f) / width;
      Vec3 dir{std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)};
      float tmix = 0.5f * (dir.y + 1.f);
      Vec3 c = bottom * (1.f - tmix) + top * tmix;
      for (const Lobe& lobe : lobes) {
        float ang = std::acos(clampf(dot(dir, lobe.dir), -1.f, 1.f));
        c = c + lobe.color * std::exp(-ang * ang * lobe.sharpness);
      }
      img.at(x, y, 0) = c.x;
      img.at(x, y, 1) = c.y;
      img.at(x, y, 2) = c.z;
    }
  }
  return img;
}

}  // namespace mvlight
