#pragma once

#include <torch/torch.h>

#include <optional>

#include "mvlight/common.hpp"

namespace mvlight {

struct NetConfig {
  int in_channels = 3;
  int base_width = 64;   // 32-res level
  int mid_width = 128;   // 16- and 8-res levels
  int cond_dim = 128;    // width of light/albedo/normal/text tokens
  int time_dim = 256;
  int num_heads = 4;
  int num_groups = 8;
  int vocab_size = 23;
  int caption_len = 16;
};

// Sinusoidal timestep features followed by a 2-layer MLP.
struct TimeEmbedImpl : torch::nn::Module {
  explicit TimeEmbedImpl(int dim);
  torch::Tensor forward(const torch::Tensor& t);  // [B] int64 -> [B, dim]
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  int dim;
};
TORCH_MODULE(TimeEmbed);

// Flattened 4x4 extrinsics -> per-view additive time-embedding term.
struct CameraEmbedImpl : torch::nn::Module {
  CameraEmbedImpl(int out_dim);
  torch::Tensor forward(const torch::Tensor& zeta);  // [B,V,16] -> [B,V,out_dim]
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(CameraEmbed);

struct ResBlockImpl : torch::nn::Module {
  ResBlockImpl(int in_ch, int out_ch, int time_dim, int groups);
  // x: [N, C, H, W] (views folded into the batch), emb: [N, time_dim]
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& emb);
  torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, skip{nullptr};
  torch::nn::Linear emb_proj{nullptr};
  bool has_skip;
};
TORCH_MODULE(ResBlock);

// Joint self-attention over all views: [B, V, C, H, W] is flattened to
// (V*H*W) tokens per sample so attention spans every position of every view.
// With V=1 this is exactly single-view self-attention.
struct JointSelfAttentionImpl : torch::nn::Module {
  JointSelfAttentionImpl(int channels, int heads);
  torch::Tensor forward(const torch::Tensor& x);  // [B,V,C,H,W] -> same
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear qkv{nullptr}, proj{nullptr};
  int heads;
};
TORCH_MODULE(JointSelfAttention);

// Queries from feature positions, keys/values from a conditioning sequence.
struct CrossAttentionImpl : torch::nn::Module {
  CrossAttentionImpl(int channels, int ctx_dim, int heads);
  // tokens: [B, L, C], ctx: [B, T, ctx_dim]; returns the residual branch.
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& ctx);
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear to_q{nullptr}, to_k{nullptr}, to_v{nullptr}, proj{nullptr};
  int heads;
};
TORCH_MODULE(CrossAttention);

// Light cross-attention followed by text cross-attention, each residual:
// h' = h + CA_light(h, e); h'' = h' + CA_text(h', y). The light branch is
// skipped entirely when no light/modality condition is given (2D mode).
struct CondBlockImpl : torch::nn::Module {
  CondBlockImpl(int channels, int cond_dim, int heads);
  torch::Tensor forward(const torch::Tensor& x, const std::optional<torch::Tensor>& cond_tokens,
                        const torch::Tensor& text_tokens);  // x: [B,V,C,H,W]
  CrossAttention light_attn{nullptr}, text_attn{nullptr};
};
TORCH_MODULE(CondBlock);

// Three-resolution denoising U-Net (32/16/8 at the default 32x32 input) with
// joint self-attention and conditioning blocks at the two lower resolutions.
struct MVUNetImpl : torch::nn::Module {
  explicit MVUNetImpl(const NetConfig& cfg);

  // x: [B,V,C,H,W]; t: [B]; y: [B,L] token ids; zeta: [B,V,16] or nullopt
  // (camera embedding skipped); cond: [B,T,cond_dim] or nullopt (light
  // cross-attention skipped). Returns predicted noise, same shape as x.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& t, const torch::Tensor& y,
                        const std::optional<torch::Tensor>& zeta,
                        const std::optional<torch::Tensor>& cond);

  NetConfig cfg;
  TimeEmbed time_embed{nullptr};
  CameraEmbed camera_embed{nullptr};
  torch::nn::Embedding text_table{nullptr};
  torch::nn::Conv2d conv_in{nullptr}, down1{nullptr}, down2{nullptr}, up_conv2{nullptr},
      up_conv1{nullptr}, conv_out{nullptr};
  ResBlock rb0{nullptr}, rb1{nullptr}, rb2{nullptr}, mid1{nullptr}, mid2{nullptr}, ub2{nullptr},
      ub1{nullptr}, ub0{nullptr};
  JointSelfAttention sa1{nullptr}, sa2{nullptr}, sa_mid{nullptr}, usa2{nullptr}, usa1{nullptr};
  CondBlock cb1{nullptr}, cb2{nullptr}, cb_mid{nullptr}, ucb2{nullptr}, ucb1{nullptr};
  torch::nn::GroupNorm norm_out{nullptr};
};
TORCH_MODULE(MVUNet);

}  // namespace mvlight
