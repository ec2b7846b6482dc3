#pragma once

#include <torch/torch.h>

#include "mvlight/hdr.hpp"

namespace mvlight {

// Maps the hf/lf split of an environment map to a single conditioning token.
// Each component is area-downsampled to a fixed 16x16x3 grid, flattened
// (channel-major), and run through its own 2-layer MLP to half the token
// width; the halves are concatenated.
struct LightEncoderImpl : torch::nn::Module {
  LightEncoderImpl(int token_dim, int hidden = 256);

  // Deterministic featurization, independent of the weights: [2, 768].
  static torch::Tensor component_features(const LightComponents& comps);

  // feats: [N, 2, 768] -> tokens [N, token_dim]
  torch::Tensor forward(const torch::Tensor& feats);
  // Single map convenience: [1, token_dim].
  torch::Tensor encode(const LightComponents& comps);

  torch::nn::Linear hf1{nullptr}, hf2{nullptr}, lf1{nullptr}, lf2{nullptr};
  int token_dim;

  static constexpr int kGrid = 16;
  static constexpr int kFeat = kGrid * kGrid * 3;
};
TORCH_MODULE(LightEncoder);

}  // namespace mvlight
