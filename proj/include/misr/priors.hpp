#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "misr/volume.hpp"

namespace misr {

/// Rectified interpolation between data (t=0) and noise (t=1):
/// x_t = alpha(t) x_0 + beta(t) eps with alpha = 1-t, beta = t.
struct FlowSchedule {
  double alpha(double t) const { return 1.0 - t; }
  double beta(double t) const { return t; }
};

/// A prior is anything that can report the posterior mean mu_0(x_t) =
/// E[x_0 | x_t] at noise level t, plus the vector-Jacobian product
/// grad_{x_t} <mu_0(x_t), v> that likelihood corrections chain through.
class Prior {
public:
  virtual ~Prior() = default;

  virtual Volume denoise(const Volume& x_t, double t) const = 0;
  virtual Volume vjp(const Volume& x_t, double t, const Volume& v) const = 0;

  const FlowSchedule& schedule() const { return schedule_; }

protected:
  FlowSchedule schedule_{};
};

/// x_0 ~ N(mean, tau^2 I), or per-voxel diagonal variance when provided.
/// The posterior mean is affine in x_t:
///   mu_0 = m + alpha tau^2 / (alpha^2 tau^2 + beta^2) (x_t - alpha m).
class GaussianPrior final : public Prior {
public:
  GaussianPrior(Volume mean, double tau2);
  GaussianPrior(Volume mean, Volume voxel_var);

  Volume denoise(const Volume& x_t, double t) const override;
  Volume vjp(const Volume& x_t, double t, const Volume& v) const override;

  const Volume& mean() const { return mean_; }
  double tau2() const { return tau2_; }

private:
  Volume mean_;
  double tau2_ = 0.0;
  std::optional<Volume> voxel_var_;
};

/// Finite Gaussian mixture with isotropic per-component variances. The
/// posterior mean mixes the per-component affine denoisers with
/// responsibilities r_k(x_t) computed by log-sum-exp; the analytic VJP
/// carries the responsibility-gradient terms of the full product rule.
class MixturePrior final : public Prior {
public:
  struct Component {
    double weight;
    Volume mean;
    double tau2;
  };

  explicit MixturePrior(std::vector<Component> components);

  Volume denoise(const Volume& x_t, double t) const override;
  Volume vjp(const Volume& x_t, double t, const Volume& v) const override;

  std::vector<double> responsibilities(const Volume& x_t, double t) const;
  std::size_t component_count() const { return comps_.size(); }
  const Component& component(std::size_t k) const { return comps_[k]; }

private:
  struct Eval;
  Eval evaluate(const Volume& x_t, double t) const;

  std::vector<Component> comps_;
};

/// u_hat = eps_hat - x_0_hat, the field a flow-trained network would predict.
/// Requires t > 0 (beta vanishes at t = 0).
Volume flow_field(const Prior& prior, const Volume& x_t, double t);

/// Central-difference fallback for priors without an analytic Jacobian:
/// grad_i ~= [<mu_0(x + h e_i), v> - <mu_0(x - h e_i), v>] / (2h).
/// Costs 2n denoise calls; test-scale volumes only.
Volume fd_vjp(const Prior& prior, const Volume& x_t, double t, const Volume& v, double h);

/// Pass-through wrapper that counts evaluations (NFE accounting).
class CountingPrior final : public Prior {
public:
  explicit CountingPrior(const Prior& inner) : inner_(inner) { schedule_ = inner.schedule(); }

  Volume denoise(const Volume& x_t, double t) const override {
    ++denoise_calls_;
    return inner_.denoise(x_t, t);
  }
  Volume vjp(const Volume& x_t, double t, const Volume& v) const override {
    ++vjp_calls_;
    return inner_.vjp(x_t, t, v);
  }

  std::size_t denoise_calls() const { return denoise_calls_; }
  std::size_t vjp_calls() const { return vjp_calls_; }
  void reset() { denoise_calls_ = vjp_calls_ = 0; }

private:
  const Prior& inner_;
  mutable std::size_t denoise_calls_ = 0;
  mutable std::size_t vjp_calls_ = 0;
};

}  // namespace misr
