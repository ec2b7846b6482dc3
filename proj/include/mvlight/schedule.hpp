#pragma once

#include <torch/torch.h>

#include "mvlight/common.hpp"

namespace mvlight {

// DDPM noising schedule. alpha_bar is the cumulative product of (1 - beta_t),
// strictly decreasing with alpha_bar[0] close to 1.
struct DiffusionSchedule {
  int t_max = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  torch::Tensor betas;      // [T] float64
  torch::Tensor alpha_bar;  // [T] float64

  static DiffusionSchedule linear(int t_max = 1000, double beta_start = 1e-4,
                                  double beta_end = 2e-2);
  void validate() const;

  // Per-sample gathers, shaped [B,1,1,1,1] for broadcasting over view batches.
  torch::Tensor gather_alpha_bar(const torch::Tensor& t, torch::ScalarType dtype,
                                 int64_t extra_dims) const;
};

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                       const DiffusionSchedule& sched);

// x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
torch::Tensor reconstruct_x0(const torch::Tensor& x_t, const torch::Tensor& eps_hat,
                             const torch::Tensor& t, const DiffusionSchedule& sched);

}  // namespace mvlight
