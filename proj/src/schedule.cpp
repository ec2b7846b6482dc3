#include "mvlight/schedule.hpp"

namespace mvlight {

DiffusionSchedule DiffusionSchedule::linear(int t_max, double beta_start, double beta_end) {
  if (t_max < 1) throw ArgumentError("schedule: t_max must be >= 1");
  DiffusionSchedule s;
  s.t_max = t_max;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas = t_max == 1 ? torch::full({1}, beta_start, torch::kFloat64)
                       : torch::linspace(beta_start, beta_end, t_max, torch::kFloat64);
  s.alpha_bar = torch::cumprod(1.0 - s.betas, 0);
  s.validate();
  return s;
}

void DiffusionSchedule::validate() const {
  if (betas.numel() != t_max || alpha_bar.numel() != t_max)
    throw ContractError("schedule: length mismatch");
  if ((betas <= 0).any().item<bool>() || (betas >= 1).any().item<bool>())
    throw ContractError("schedule: betas must lie in (0,1)");
  if (t_max > 1) {
    auto diff = alpha_bar.slice(0, 1) - alpha_bar.slice(0, 0, t_max - 1);
    if ((diff >= 0).any().item<bool>())
      throw ContractError("schedule: alpha_bar must be strictly decreasing");
  }
}

torch::Tensor DiffusionSchedule::gather_alpha_bar(const torch::Tensor& t,
                                                  torch::ScalarType dtype,
                                                  int64_t extra_dims) const {
  if ((t < 0).any().item<bool>() || (t >= t_max).any().item<bool>())
    throw ArgumentError("schedule: t out of range");
  auto ab = alpha_bar.index_select(0, t.to(torch::kLong)).to(dtype);
  std::vector<int64_t> shape(1 + extra_dims, 1);
  shape[0] = ab.numel();
  return ab.reshape(shape);
}

torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                       const DiffusionSchedule& sched) {
  auto ab = sched.gather_alpha_bar(t, x0.scalar_type(), x0.dim() - 1);
  return ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps;
}

torch::Tensor reconstruct_x0(const torch::Tensor& x_t, const torch::Tensor& eps_hat,
                             const torch::Tensor& t, const DiffusionSchedule& sched) {
  auto ab = sched.gather_alpha_bar(t, x_t.scalar_type(), x_t.dim() - 1);
  if ((ab <= 0).any().item<bool>())
    throw NumericError("reconstruct_x0: alpha_bar must be positive");
  return (x_t - (1.0 - ab).sqrt() * eps_hat) / ab.sqrt();
}

}  // namespace mvlight
