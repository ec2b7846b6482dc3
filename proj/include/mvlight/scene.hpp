#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mvlight/common.hpp"
#include "mvlight/hdr.hpp"
#include "mvlight/material.hpp"

namespace mvlight {

enum class Shape { Sphere, Box, Cylinder };

const char* shape_name(Shape s);

// Axis-aligned primitive: a unit shape centered at `center`, scaled per axis.
// Spheres keep isotropic scale so the caption stays truthful.
struct Primitive {
  Shape shape = Shape::Sphere;
  Vec3 center{0, 0, 0};
  Vec3 scale{0.25f, 0.25f, 0.25f};
  PbrMaterial material;
};

struct SceneSpec {
  std::vector<Primitive> primitives;  // 1..3, all inside [-0.5, 0.5]^3
  std::string caption;
  uint64_t seed = 0;
};

// World-to-camera pose. The rotation rows are (right, up, back); the camera
// looks along -z in camera space. Flattened row-major to 16 scalars for
// conditioning, [r00 r01 r02 tx r10 ... 0 0 0 1].
struct CameraPose {
  std::array<float, 16> extrinsic{};
  float fov_y_deg = 50.f;

  Vec3 eye() const;
  Vec3 right() const { return {extrinsic[0], extrinsic[1], extrinsic[2]}; }
  Vec3 up() const { return {extrinsic[4], extrinsic[5], extrinsic[6]}; }
  Vec3 back() const { return {extrinsic[8], extrinsic[9], extrinsic[10]}; }
  Vec3 forward() const { return -back(); }
  // Ray through pixel center (px, py) of a width x height image.
  void pixel_ray(float px, float py, int width, int height, Vec3& origin, Vec3& dir) const;
  // || R^T R - I ||_max
  float rotation_orthonormality_error() const;
};

CameraPose look_at_camera(Vec3 eye, Vec3 target, float fov_y_deg);

// n cameras on a horizontal orbit at the given elevation, all looking at the
// origin, azimuths uniformly spaced starting at azimuth0_deg.
std::vector<CameraPose> orbit_cameras(int n, float elevation_deg, float radius,
                                      float azimuth0_deg = 0.f, float fov_y_deg = 50.f);

// Deterministic scene draw: 1-3 primitives with palette albedo and a caption
// like "a red matte sphere and a blue metallic box".
SceneSpec sample_scene(uint64_t seed);

// Caption derived from primitive values alone (nearest palette color, material
// class from roughness/metallic thresholds). sample_scene guarantees
// caption_for(spec.primitives) == spec.caption.
std::string caption_for(const std::vector<Primitive>& primitives);

struct PaletteEntry {
  const char* name;
  Vec3 albedo;
};
const std::vector<PaletteEntry>& color_palette();
const char* material_adjective(const PbrMaterial& m);

// Procedural equirectangular HDR environment: low ambient gradient plus a few
// Gaussian lobes. Intensities reach into the l_max-clamp range.
HdrImage make_synthetic_light(uint64_t seed, int width = 64, int height = 32);

}  // namespace mvlight
