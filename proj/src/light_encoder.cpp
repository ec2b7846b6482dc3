#include "mvlight/light_encoder.hpp"

namespace mvlight {

LightEncoderImpl::LightEncoderImpl(int token_dim_, int hidden) : token_dim(token_dim_) {
  if (token_dim % 2 != 0) throw ArgumentError("light encoder token dim must be even");
  hf1 = register_module("hf1", torch::nn::Linear(kFeat, hidden));
  hf2 = register_module("hf2", torch::nn::Linear(hidden, token_dim / 2));
  lf1 = register_module("lf1", torch::nn::Linear(kFeat, hidden));
  lf2 = register_module("lf2", torch::nn::Linear(hidden, token_dim / 2));
}

torch::Tensor LightEncoderImpl::component_features(const LightComponents& comps) {
  auto pool = [&](const std::vector<float>& data) {
    auto t = torch::from_blob(const_cast<float*>(data.data()),
                              {comps.height, comps.width, 3}, torch::kFloat32)
                 .permute({2, 0, 1})
                 .unsqueeze(0);
    auto pooled = torch::adaptive_avg_pool2d(t, {kGrid, kGrid});  // [1,3,16,16]
    return pooled.reshape({kFeat}).clone();
  };
  for (float v : comps.hf)
    if (!std::isfinite(v)) throw NumericError("light component hf contains non-finite values");
  for (float v : comps.lf)
    if (!std::isfinite(v)) throw NumericError("light component lf contains non-finite values");
  return torch::stack({pool(comps.hf), pool(comps.lf)}, 0);  // [2, 768]
}

torch::Tensor LightEncoderImpl::forward(const torch::Tensor& feats) {
  auto dtype = hf1->weight.scalar_type();
  auto f = feats.to(dtype);
  auto hf = f.select(1, 0);
  auto lf = f.select(1, 1);
  auto hf_out = hf2->forward(torch::silu(hf1->forward(hf)));
  auto lf_out = lf2->forward(torch::silu(lf1->forward(lf)));
  return torch::cat({hf_out, lf_out}, -1);
}

torch::Tensor LightEncoderImpl::encode(const LightComponents& comps) {
  return forward(component_features(comps).unsqueeze(0));
}

}  // namespace mvlight
