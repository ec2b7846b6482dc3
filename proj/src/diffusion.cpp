#include "mvlight/diffusion.hpp"

#include "mvlight/checkpoint.hpp"

namespace mvlight {

const char* condition_kind_name(ConditionKind k) {
  switch (k) {
    case ConditionKind::Light: return "light";
    case ConditionKind::Albedo: return "albedo";
    case ConditionKind::Normal: return "normal";
    case ConditionKind::Null: return "null";
  }
  return "null";
}

LightSet build_light_set(std::vector<HdrImage> maps, std::vector<std::string> ids, float l_max) {
  if (maps.empty()) throw ArgumentError("light set must contain at least one map");
  if (ids.size() != maps.size()) throw ArgumentError("light set ids/maps size mismatch");
  LightSet set;
  set.ids = std::move(ids);
  set.maps = std::move(maps);
  std::vector<torch::Tensor> feats;
  feats.reserve(set.maps.size());
  for (const auto& m : set.maps)
    feats.push_back(LightEncoderImpl::component_features(decompose(m, l_max)));
  set.comp_features = torch::stack(feats, 0);
  return set;
}

SampledCondition sample_condition(int n_lights, std::mt19937_64& rng) {
  if (n_lights < 1) throw ArgumentError("sample_condition: empty light set");
  std::uniform_int_distribution<int> dist(0, n_lights + 1);
  int draw = dist(rng);
  if (draw == 0) return {ConditionKind::Albedo, -1};
  if (draw == 1) return {ConditionKind::Normal, -1};
  return {ConditionKind::Light, draw - 2};
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"in_channels", net.in_channels}, {"base_width", net.base_width},
      {"mid_width", net.mid_width},     {"cond_dim", net.cond_dim},
      {"time_dim", net.time_dim},       {"num_heads", net.num_heads},
      {"num_groups", net.num_groups},   {"vocab_size", net.vocab_size},
      {"caption_len", net.caption_len}, {"n_views", n_views},
      {"image_size", image_size},       {"t_max", t_max},
      {"beta_start", beta_start},       {"beta_end", beta_end},
      {"l_max", l_max},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.net.in_channels = j.at("in_channels");
  c.net.base_width = j.at("base_width");
  c.net.mid_width = j.at("mid_width");
  c.net.cond_dim = j.at("cond_dim");
  c.net.time_dim = j.at("time_dim");
  c.net.num_heads = j.at("num_heads");
  c.net.num_groups = j.at("num_groups");
  c.net.vocab_size = j.at("vocab_size");
  c.net.caption_len = j.at("caption_len");
  c.n_views = j.at("n_views");
  c.image_size = j.at("image_size");
  c.t_max = j.at("t_max");
  c.beta_start = j.at("beta_start");
  c.beta_end = j.at("beta_end");
  c.l_max = j.at("l_max");
  return c;
}

MVLightModelImpl::MVLightModelImpl(ModelConfig cfg_, Vocabulary vocab_)
    : cfg(std::move(cfg_)), vocab(std::move(vocab_)) {
  if (cfg.net.vocab_size != vocab.size())
    cfg.net.vocab_size = vocab.size();
  sched = DiffusionSchedule::linear(cfg.t_max, cfg.beta_start, cfg.beta_end);
  unet = register_module("unet", MVUNet(cfg.net));
  light_encoder = register_module("light_encoder", LightEncoder(cfg.net.cond_dim));
  e_albedo = register_parameter("e_albedo", torch::randn({1, cfg.net.cond_dim}) * 0.02);
  e_normal = register_parameter("e_normal", torch::randn({1, cfg.net.cond_dim}) * 0.02);

  // e_a, e_n and e_l must share one shape.
  auto probe = light_encoder->forward(torch::zeros({1, 2, LightEncoderImpl::kFeat}));
  if (!probe.sizes().equals(e_albedo.sizes()) || !e_albedo.sizes().equals(e_normal.sizes()))
    throw ContractError("condition embeddings must share shape [1, D]");
}

ConditionEmbedding MVLightModelImpl::embed_albedo() const {
  return {e_albedo, ConditionKind::Albedo};
}
ConditionEmbedding MVLightModelImpl::embed_normal() const {
  return {e_normal, ConditionKind::Normal};
}
ConditionEmbedding MVLightModelImpl::embed_null() const {
  return {torch::zeros_like(e_albedo), ConditionKind::Null};
}
ConditionEmbedding MVLightModelImpl::embed_light(const LightComponents& comps) {
  return {light_encoder->encode(comps), ConditionKind::Light};
}

torch::Tensor MVLightModelImpl::condition_tokens(const std::vector<SampledCondition>& conds,
                                                 const LightSet& lights) {
  std::vector<torch::Tensor> rows;
  rows.reserve(conds.size());
  auto light_tokens = light_encoder->forward(lights.comp_features);  // [N_l, D]
  for (const auto& c : conds) {
    switch (c.kind) {
      case ConditionKind::Albedo: rows.push_back(e_albedo.squeeze(0)); break;
      case ConditionKind::Normal: rows.push_back(e_normal.squeeze(0)); break;
      case ConditionKind::Null: rows.push_back(torch::zeros_like(e_albedo).squeeze(0)); break;
      case ConditionKind::Light:
        if (c.light_index < 0 || c.light_index >= lights.size())
          throw ArgumentError("condition light index out of range");
        rows.push_back(light_tokens[c.light_index]);
        break;
    }
  }
  return torch::stack(rows, 0).unsqueeze(1);  // [B, 1, D]
}

torch::Tensor MVLightModelImpl::denoise(const torch::Tensor& x_t, const torch::Tensor& t,
                                        const torch::Tensor& y,
                                        const std::optional<torch::Tensor>& zeta,
                                        const std::optional<torch::Tensor>& cond) {
  return unet->forward(x_t, t, y, zeta, cond);
}

torch::Tensor MVLightModelImpl::cfg_denoise(const torch::Tensor& x_t, const torch::Tensor& t,
                                            const torch::Tensor& y,
                                            const std::optional<torch::Tensor>& zeta,
                                            const std::optional<torch::Tensor>& cond,
                                            double scale) {
  if (scale < 0.0) throw ArgumentError("cfg scale must be >= 0");
  if (scale == 1.0) return denoise(x_t, t, y, zeta, cond);
  auto null_ids = vocab.null_caption();
  auto y_null = torch::tensor(null_ids, torch::kLong).unsqueeze(0).expand({y.size(0), -1});
  auto eps_u = denoise(x_t, t, y_null, zeta, cond);
  if (scale == 0.0) return eps_u;
  auto eps_c = denoise(x_t, t, y, zeta, cond);
  return eps_u + scale * (eps_c - eps_u);
}

torch::Tensor MVLightModelImpl::sample(const std::vector<int64_t>& y,
                                       const std::optional<torch::Tensor>& zeta,
                                       const std::optional<ConditionEmbedding>& cond, int steps,
                                       double scale, uint64_t seed) {
  if (steps < 1) throw ArgumentError("sample: steps must be >= 1");
  torch::NoGradGuard no_grad;
  auto dtype = e_albedo.scalar_type();
  int64_t V = zeta.has_value() ? zeta->size(0) : cfg.n_views;
  auto gen = at::detail::createCPUGenerator(seed);
  auto x = torch::randn({1, V, cfg.net.in_channels, cfg.image_size, cfg.image_size},
                        gen, torch::TensorOptions().dtype(dtype));
  auto y_t = torch::tensor(y, torch::kLong).unsqueeze(0);
  std::optional<torch::Tensor> zeta_b;
  if (zeta.has_value()) zeta_b = zeta->unsqueeze(0).to(dtype);
  std::optional<torch::Tensor> cond_b;
  if (cond.has_value()) cond_b = cond->tokens.unsqueeze(0).to(dtype);

  std::vector<int64_t> ts(steps);
  for (int i = 0; i < steps; i++) {
    double f = steps == 1 ? 1.0 : 1.0 - static_cast<double>(i) / (steps - 1);
    ts[i] = std::max<int64_t>(0, std::llround(f * (cfg.t_max - 1)));
  }
  for (int i = 0; i < steps; i++) {
    auto t_b = torch::full({1}, ts[i], torch::kLong);
    auto eps = cfg_denoise(x, t_b, y_t, zeta_b, cond_b, scale);
    auto x0 = torch::clamp(reconstruct_x0(x, eps, t_b, sched), -1.0, 1.0);
    if (i + 1 == steps) {
      x = x0;
    } else {
      auto ab = sched.gather_alpha_bar(torch::full({1}, ts[i + 1], torch::kLong), dtype,
                                       x.dim() - 1);
      x = ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps;
    }
  }
  return to_image_space(x.squeeze(0));
}

void MVLightModelImpl::save(const std::filesystem::path& path,
                            const std::map<std::string, torch::Tensor>& extra_tensors,
                            const nlohmann::json& extra_meta) {
  Checkpoint ckpt;
  ckpt.meta["kind"] = "mvlight-diffusion";
  ckpt.meta["version"] = 1;
  ckpt.meta["config"] = cfg.to_json();
  ckpt.meta["vocab"] = vocab.words();
  ckpt.meta["step"] = step;
  if (!extra_meta.is_null()) ckpt.meta["extra"] = extra_meta;
  for (const auto& [name, t] : named_state(*this)) ckpt.tensors[name] = t;
  for (const auto& [name, t] : extra_tensors) ckpt.tensors[name] = t;
  save_checkpoint(path, ckpt);
}

MVLightModel load_model(const std::filesystem::path& path, torch::ScalarType dtype,
                        bool prefer_ema) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "mvlight-diffusion")
    throw FormatError("not a diffusion checkpoint: " + path.string());
  auto cfg = ModelConfig::from_json(ckpt.meta.at("config"));
  Vocabulary vocab(ckpt.meta.at("vocab").get<std::vector<std::string>>());
  MVLightModel model(cfg, vocab);
  model->to(dtype);
  // EMA weights, when present, take priority for inference-style loads.
  std::map<std::string, torch::Tensor> state;
  bool has_ema = false;
  for (const auto& [name, t] : ckpt.tensors)
    if (name.rfind("ema/", 0) == 0) has_ema = true;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("ema/", 0) == 0) {
      if (prefer_ema) state[name.substr(4)] = t;
    } else if (!prefer_ema || !has_ema) {
      state[name] = t;
    } else if (state.find(name) == state.end()) {
      state[name] = t;  // fallback for params without an EMA entry
    }
  }
  load_state(*model, state);
  model->step = ckpt.meta.value("step", 0);
  return model;
}

}  // namespace mvlight
