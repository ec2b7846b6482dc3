#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"
#include "mvlight/hdr.hpp"
#include "mvlight/light_encoder.hpp"
#include "mvlight/schedule.hpp"
#include "mvlight/tokenizer.hpp"
#include "mvlight/unet.hpp"

namespace mvlight {

enum class ConditionKind { Light, Albedo, Normal, Null };

const char* condition_kind_name(ConditionKind k);

// Token(s) fed to the light cross-attention slot: the computed light token,
// one of the learned modality tokens, or the all-zeros null token.
struct ConditionEmbedding {
  torch::Tensor tokens;  // [T, D]
  ConditionKind kind = ConditionKind::Null;
};

struct SampledCondition {
  ConditionKind kind = ConditionKind::Light;
  int light_index = -1;  // valid when kind == Light
};

// The per-batch condition universe: albedo, normal, and N_l HDR entries.
struct LightSet {
  std::vector<std::string> ids;
  std::vector<HdrImage> maps;
  torch::Tensor comp_features;  // [N_l, 2, 768], fixed once built

  int size() const { return static_cast<int>(maps.size()); }
};

LightSet build_light_set(std::vector<HdrImage> maps, std::vector<std::string> ids, float l_max);

// Eq-style balanced draw: albedo and normal each with probability 1/(2+N_l),
// otherwise a uniformly chosen light entry.
SampledCondition sample_condition(int n_lights, std::mt19937_64& rng);

struct ModelConfig {
  NetConfig net;
  int n_views = 4;
  int image_size = 32;
  int t_max = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  float l_max = kDefaultLmax;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// The light-conditioned multi-view denoiser plus its conditioning machinery.
struct MVLightModelImpl : torch::nn::Module {
  MVLightModelImpl(ModelConfig cfg, Vocabulary vocab);

  ModelConfig cfg;
  Vocabulary vocab;
  DiffusionSchedule sched;
  MVUNet unet{nullptr};
  LightEncoder light_encoder{nullptr};
  torch::Tensor e_albedo, e_normal;  // [1, D] learned modality embeddings
  int64_t step = 0;                  // training step counter (buffer-like)

  int cond_dim() const { return cfg.net.cond_dim; }

  ConditionEmbedding embed_albedo() const;
  ConditionEmbedding embed_normal() const;
  ConditionEmbedding embed_null() const;
  ConditionEmbedding embed_light(const LightComponents& comps);

  // Batched condition tokens [B, 1, D] for sampled conditions over a light set.
  torch::Tensor condition_tokens(const std::vector<SampledCondition>& conds,
                                 const LightSet& lights);

  // Forward through the U-Net. y: [B, L] ids; zeta: [B,V,16] or nullopt;
  // cond: [B,T,D] or nullopt. 2D mode is V=1 with both optionals empty.
  torch::Tensor denoise(const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y,
                        const std::optional<torch::Tensor>& zeta,
                        const std::optional<torch::Tensor>& cond);

  // eps_u + scale * (eps_c - eps_u); the unconditional branch replaces the
  // caption with the null caption and keeps the light condition.
  torch::Tensor cfg_denoise(const torch::Tensor& x_t, const torch::Tensor& t,
                            const torch::Tensor& y, const std::optional<torch::Tensor>& zeta,
                            const std::optional<torch::Tensor>& cond, double scale);

  // Deterministic DDIM trajectory from seeded noise; returns [V,C,H,W] in [0,1].
  torch::Tensor sample(const std::vector<int64_t>& y, const std::optional<torch::Tensor>& zeta,
                       const std::optional<ConditionEmbedding>& cond, int steps, double scale,
                       uint64_t seed);

  void save(const std::filesystem::path& path,
            const std::map<std::string, torch::Tensor>& extra_tensors = {},
            const nlohmann::json& extra_meta = {});
};
TORCH_MODULE(MVLightModel);

MVLightModel load_model(const std::filesystem::path& path,
                        torch::ScalarType dtype = torch::kFloat32, bool prefer_ema = true);

// [0,1] image space <-> [-1,1] model space.
inline torch::Tensor to_model_space(const torch::Tensor& img) { return img * 2.0 - 1.0; }
inline torch::Tensor to_image_space(const torch::Tensor& x) {
  return torch::clamp((x + 1.0) * 0.5, 0.0, 1.0);
}

}  // namespace mvlight
