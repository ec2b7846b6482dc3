#pragma once

#include "mvlight/common.hpp"

namespace mvlight {

// Physically based material triple. Fields are clamped on construction;
// the 0.03 roughness floor keeps the specular lobe finite.
struct PbrMaterial {
  Vec3 albedo{0.5f, 0.5f, 0.5f};
  float roughness = 0.5f;
  float metallic = 0.0f;

  static PbrMaterial make(Vec3 albedo, float roughness, float metallic) {
    PbrMaterial m;
    m.albedo = {clampf(albedo.x, 0.f, 1.f), clampf(albedo.y, 0.f, 1.f),
                clampf(albedo.z, 0.f, 1.f)};
    m.roughness = clampf(roughness, kRoughnessFloor, 1.f);
    m.metallic = clampf(metallic, 0.f, 1.f);
    return m;
  }

  static constexpr float kRoughnessFloor = 0.03f;
};

}  // namespace mvlight
