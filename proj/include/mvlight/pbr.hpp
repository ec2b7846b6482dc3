#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <vector>

#include "mvlight/hdr.hpp"
#include "mvlight/material.hpp"

namespace mvlight {

// Prefiltered environment for split-sum shading. diffuse holds the
// cosine-convolved irradiance over pi (so a constant unit source gives 1);
// spec_levels holds cosine-power blurs at the roughness grid.
struct EnvLight {
  torch::Tensor diffuse;      // [8, 16, 3] float32
  torch::Tensor spec_levels;  // [L, 16, 32, 3] float32
  std::vector<float> level_roughness = {0.03f, 0.25f, 0.5f, 0.75f, 1.0f};
  uint64_t source_hash = 0;   // identity of the HdrImage this came from
};

EnvLight prefilter(const HdrImage& light);

void save_env_light(const std::filesystem::path& path, const EnvLight& env);
EnvLight load_env_light(const std::filesystem::path& path);

// Split-sum environment BRDF LUT; [2, R, NV] scale/bias over
// (roughness, n-dot-v). Built once per process by GGX quadrature.
const torch::Tensor& env_brdf_lut();

// Batched split-sum shading. albedo [N,3], roughness [N], metallic [N],
// n [N,3], v [N,3] (unit, v points from surface to eye). Differentiable in
// the material tensors. Works in the dtype of its inputs.
torch::Tensor shade(torch::Tensor albedo, torch::Tensor roughness, torch::Tensor metallic,
                    torch::Tensor n, torch::Tensor v, const EnvLight& env,
                    bool check_units = true);

// Scalar convenience wrapper.
Vec3 shade_point(const PbrMaterial& m, Vec3 n, Vec3 v, const EnvLight& env);

// Unbiased Monte-Carlo estimate of the same BRDF integral by direct
// cosine-weighted hemisphere sampling of the source radiance. Independent of
// the prefilter/LUT path; used as the verification oracle.
Vec3 shade_reference(const PbrMaterial& m, Vec3 n, Vec3 v, const HdrImage& light,
                     int n_samples, uint64_t seed);

// Bilinear equirect lookup of the raw source radiance (used by the oracle and
// by background rendering). dir need not be normalized exactly.
Vec3 sample_equirect(const HdrImage& img, Vec3 dir);

}  // namespace mvlight
