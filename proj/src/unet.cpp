#include "mvlight/unet.hpp"

#include <cmath>

namespace mvlight {

namespace {

void zero_init(torch::nn::Linear& layer) {
  torch::NoGradGuard g;
  layer->weight.zero_();
  if (layer->bias.defined()) layer->bias.zero_();
}

void zero_init(torch::nn::Conv2d& layer) {
  torch::NoGradGuard g;
  layer->weight.zero_();
  if (layer->bias.defined()) layer->bias.zero_();
}

torch::Tensor attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                        int heads) {
  // q: [B, Lq, C], k/v: [B, Lk, C] -> [B, Lq, C]
  int64_t B = q.size(0), Lq = q.size(1), C = q.size(2), Lk = k.size(1);
  int64_t hd = C / heads;
  auto split = [&](const torch::Tensor& t, int64_t L) {
    return t.reshape({B, L, heads, hd}).permute({0, 2, 1, 3});
  };
  auto qe = split(q, Lq), ke = split(k, Lk), ve = split(v, Lk);
  auto scores = torch::matmul(qe, ke.transpose(-2, -1)) / std::sqrt(static_cast<double>(hd));
  auto attn = torch::softmax(scores, -1);
  auto out = torch::matmul(attn, ve);  // [B, heads, Lq, hd]
  return out.permute({0, 2, 1, 3}).reshape({B, Lq, C});
}

}  // namespace

TimeEmbedImpl::TimeEmbedImpl(int dim_) : dim(dim_) {
  fc1 = register_module("fc1", torch::nn::Linear(dim, dim));
  fc2 = register_module("fc2", torch::nn::Linear(dim, dim));
}

torch::Tensor TimeEmbedImpl::forward(const torch::Tensor& t) {
  auto dtype = fc1->weight.scalar_type();
  int half = dim / 2;
  auto freqs = torch::exp(torch::arange(half, torch::TensorOptions().dtype(dtype)) *
                          (-std::log(10000.0) / (half - 1)));
  auto args = t.to(dtype).unsqueeze(-1) * freqs.unsqueeze(0);
  auto enc = torch::cat({torch::sin(args), torch::cos(args)}, -1);
  return fc2->forward(torch::silu(fc1->forward(enc)));
}

CameraEmbedImpl::CameraEmbedImpl(int out_dim) {
  fc1 = register_module("fc1", torch::nn::Linear(16, out_dim));
  fc2 = register_module("fc2", torch::nn::Linear(out_dim, out_dim));
}

torch::Tensor CameraEmbedImpl::forward(const torch::Tensor& zeta) {
  if (zeta.size(-1) != 16) throw ArgumentError("camera embedding expects trailing dim 16");
  return fc2->forward(torch::silu(fc1->forward(zeta.to(fc1->weight.scalar_type()))));
}

ResBlockImpl::ResBlockImpl(int in_ch, int out_ch, int time_dim, int groups)
    : has_skip(in_ch != out_ch) {
  norm1 = register_module("norm1", torch::nn::GroupNorm(groups, in_ch));
  conv1 = register_module("conv1",
                          torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)));
  emb_proj = register_module("emb_proj", torch::nn::Linear(time_dim, out_ch));
  norm2 = register_module("norm2", torch::nn::GroupNorm(groups, out_ch));
  conv2 = register_module(
      "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out_ch, out_ch, 3).padding(1)));
  zero_init(conv2);
  if (has_skip)
    skip = register_module("skip", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 1)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& emb) {
  auto h = conv1->forward(torch::silu(norm1->forward(x)));
  h = h + emb_proj->forward(torch::silu(emb)).unsqueeze(-1).unsqueeze(-1);
  h = conv2->forward(torch::silu(norm2->forward(h)));
  return h + (has_skip ? skip->forward(x) : x);
}

JointSelfAttentionImpl::JointSelfAttentionImpl(int channels, int heads_) : heads(heads_) {
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({channels})));
  qkv = register_module("qkv", torch::nn::Linear(channels, channels * 3));
  proj = register_module("proj", torch::nn::Linear(channels, channels));
  zero_init(proj);
}

torch::Tensor JointSelfAttentionImpl::forward(const torch::Tensor& x) {
  int64_t B = x.size(0), V = x.size(1), C = x.size(2), H = x.size(3), W = x.size(4);
  auto tokens = x.permute({0, 1, 3, 4, 2}).reshape({B, V * H * W, C});
  auto h = norm->forward(tokens);
  auto qkv_out = qkv->forward(h).chunk(3, -1);
  auto out = attention(qkv_out[0], qkv_out[1], qkv_out[2], heads);
  tokens = tokens + proj->forward(out);
  return tokens.reshape({B, V, H, W, C}).permute({0, 1, 4, 2, 3}).contiguous();
}

CrossAttentionImpl::CrossAttentionImpl(int channels, int ctx_dim, int heads_) : heads(heads_) {
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({channels})));
  to_q = register_module("to_q", torch::nn::Linear(channels, channels));
  to_k = register_module("to_k", torch::nn::Linear(ctx_dim, channels));
  to_v = register_module("to_v", torch::nn::Linear(ctx_dim, channels));
  proj = register_module("proj", torch::nn::Linear(channels, channels));
  zero_init(proj);
}

torch::Tensor CrossAttentionImpl::forward(const torch::Tensor& tokens, const torch::Tensor& ctx) {
  auto h = norm->forward(tokens);
  auto out = attention(to_q->forward(h), to_k->forward(ctx), to_v->forward(ctx), heads);
  return proj->forward(out);
}

CondBlockImpl::CondBlockImpl(int channels, int cond_dim, int heads) {
  light_attn = register_module("light_attn", CrossAttention(channels, cond_dim, heads));
  text_attn = register_module("text_attn", CrossAttention(channels, cond_dim, heads));
}

torch::Tensor CondBlockImpl::forward(const torch::Tensor& x,
                                     const std::optional<torch::Tensor>& cond_tokens,
                                     const torch::Tensor& text_tokens) {
  int64_t B = x.size(0), V = x.size(1), C = x.size(2), H = x.size(3), W = x.size(4);
  auto tokens = x.permute({0, 1, 3, 4, 2}).reshape({B, V * H * W, C});
  if (cond_tokens.has_value()) tokens = tokens + light_attn->forward(tokens, *cond_tokens);
  tokens = tokens + text_attn->forward(tokens, text_tokens);
  return tokens.reshape({B, V, H, W, C}).permute({0, 1, 4, 2, 3}).contiguous();
}

MVUNetImpl::MVUNetImpl(const NetConfig& c) : cfg(c) {
  const int b = cfg.base_width, m = cfg.mid_width, g = cfg.num_groups, hd = cfg.num_heads;
  time_embed = register_module("time_embed", TimeEmbed(cfg.time_dim));
  camera_embed = register_module("camera_embed", CameraEmbed(cfg.time_dim));
  text_table = register_module("text_table", torch::nn::Embedding(cfg.vocab_size, cfg.cond_dim));

  conv_in = register_module(
      "conv_in", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.in_channels, b, 3).padding(1)));
  rb0 = register_module("rb0", ResBlock(b, b, cfg.time_dim, g));
  down1 = register_module("down1",
                          torch::nn::Conv2d(torch::nn::Conv2dOptions(b, b, 3).stride(2).padding(1)));
  rb1 = register_module("rb1", ResBlock(b, m, cfg.time_dim, g));
  sa1 = register_module("sa1", JointSelfAttention(m, hd));
  cb1 = register_module("cb1", CondBlock(m, cfg.cond_dim, hd));
  down2 = register_module("down2",
                          torch::nn::Conv2d(torch::nn::Conv2dOptions(m, m, 3).stride(2).padding(1)));
  rb2 = register_module("rb2", ResBlock(m, m, cfg.time_dim, g));
  sa2 = register_module("sa2", JointSelfAttention(m, hd));
  cb2 = register_module("cb2", CondBlock(m, cfg.cond_dim, hd));

  mid1 = register_module("mid1", ResBlock(m, m, cfg.time_dim, g));
  sa_mid = register_module("sa_mid", JointSelfAttention(m, hd));
  cb_mid = register_module("cb_mid", CondBlock(m, cfg.cond_dim, hd));
  mid2 = register_module("mid2", ResBlock(m, m, cfg.time_dim, g));

  ub2 = register_module("ub2", ResBlock(2 * m, m, cfg.time_dim, g));
  usa2 = register_module("usa2", JointSelfAttention(m, hd));
  ucb2 = register_module("ucb2", CondBlock(m, cfg.cond_dim, hd));
  up_conv2 = register_module(
      "up_conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(m, m, 3).padding(1)));
  ub1 = register_module("ub1", ResBlock(2 * m, m, cfg.time_dim, g));
  usa1 = register_module("usa1", JointSelfAttention(m, hd));
  ucb1 = register_module("ucb1", CondBlock(m, cfg.cond_dim, hd));
  up_conv1 = register_module(
      "up_conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(m, b, 3).padding(1)));
  ub0 = register_module("ub0", ResBlock(2 * b, b, cfg.time_dim, g));
  norm_out = register_module("norm_out", torch::nn::GroupNorm(g, b));
  conv_out = register_module(
      "conv_out", torch::nn::Conv2d(torch::nn::Conv2dOptions(b, cfg.in_channels, 3).padding(1)));
  zero_init(conv_out);
}

torch::Tensor MVUNetImpl::forward(const torch::Tensor& x, const torch::Tensor& t,
                                  const torch::Tensor& y,
                                  const std::optional<torch::Tensor>& zeta,
                                  const std::optional<torch::Tensor>& cond) {
  if (x.dim() != 5) throw ArgumentError("denoise expects [B,V,C,H,W]");
  int64_t B = x.size(0), V = x.size(1), C = x.size(2), H = x.size(3), W = x.size(4);
  if (C != cfg.in_channels) throw ArgumentError("denoise: channel count mismatch");
  if (t.numel() != B) throw ArgumentError("denoise: one timestep per batch sample");
  if (zeta.has_value() && (zeta->dim() != 3 || zeta->size(0) != B || zeta->size(1) != V))
    throw ArgumentError("denoise: zeta must be [B,V,16]");

  auto emb = time_embed->forward(t).unsqueeze(1).expand({B, V, cfg.time_dim});
  if (zeta.has_value()) emb = emb + camera_embed->forward(*zeta);
  auto emb_flat = emb.reshape({B * V, cfg.time_dim});

  auto text = text_table->forward(y.to(torch::kLong));  // [B, L, cond_dim]

  auto to_views = [&](const torch::Tensor& h) {
    return h.reshape({B, V, h.size(1), h.size(2), h.size(3)});
  };
  auto to_flat = [&](const torch::Tensor& h) {
    return h.reshape({B * V, h.size(2), h.size(3), h.size(4)});
  };

  auto h0 = rb0->forward(conv_in->forward(x.reshape({B * V, C, H, W})), emb_flat);
  auto h1 = rb1->forward(down1->forward(h0), emb_flat);
  h1 = to_flat(cb1->forward(sa1->forward(to_views(h1)), cond, text));
  auto h2 = rb2->forward(down2->forward(h1), emb_flat);
  h2 = to_flat(cb2->forward(sa2->forward(to_views(h2)), cond, text));

  auto mid = mid1->forward(h2, emb_flat);
  mid = to_flat(cb_mid->forward(sa_mid->forward(to_views(mid)), cond, text));
  mid = mid2->forward(mid, emb_flat);

  auto u2 = ub2->forward(torch::cat({mid, h2}, 1), emb_flat);
  u2 = to_flat(ucb2->forward(usa2->forward(to_views(u2)), cond, text));
  u2 = up_conv2->forward(torch::upsample_nearest2d(u2, {H / 2, W / 2}));

  auto u1 = ub1->forward(torch::cat({u2, h1}, 1), emb_flat);
  u1 = to_flat(ucb1->forward(usa1->forward(to_views(u1)), cond, text));
  u1 = up_conv1->forward(torch::upsample_nearest2d(u1, {H, W}));

  auto u0 = ub0->forward(torch::cat({u1, h0}, 1), emb_flat);
  auto out = conv_out->forward(torch::silu(norm_out->forward(u0)));
  return out.reshape({B, V, C, H, W});
}

}  // namespace mvlight
