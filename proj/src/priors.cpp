#include "misr/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace misr {

namespace {

void require_time(double t, const char* where) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument(std::string(where) + ": t must lie in [0, 1], got " +
                                std::to_string(t));
  }
}

}  // namespace

GaussianPrior::GaussianPrior(Volume mean, double tau2) : mean_(std::move(mean)), tau2_(tau2) {
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) {
    throw std::invalid_argument("GaussianPrior: tau^2 must be positive and finite");
  }
}

GaussianPrior::GaussianPrior(Volume mean, Volume voxel_var)
    : mean_(std::move(mean)), voxel_var_(std::move(voxel_var)) {
  require_same_dims(mean_, *voxel_var_, "GaussianPrior");
  for (double v : voxel_var_->data()) {
    if (!(v > 0.0)) throw std::invalid_argument("GaussianPrior: voxel variances must be positive");
  }
}

Volume GaussianPrior::denoise(const Volume& x_t, double t) const {
  require_time(t, "GaussianPrior::denoise");
  require_same_dims(x_t, mean_, "GaussianPrior::denoise");
  const double a = schedule_.alpha(t);
  const double b = schedule_.beta(t);
  Volume out = x_t;
  const std::size_t n = out.size();
  // mu_0 = c x_t + (1 - c alpha) m; the second coefficient is exactly zero at
  // t = 0, so the state passes through bitwise.
  if (!voxel_var_) {
    const double c = a * tau2_ / (a * a * tau2_ + b * b);
    const double cm = 1.0 - c * a;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = c * x_t[i] + cm * mean_[i];
    }
  } else {
    const Volume& var = *voxel_var_;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = a * var[i] / (a * a * var[i] + b * b);
      out[i] = c * x_t[i] + (1.0 - c * a) * mean_[i];
    }
  }
  return out;
}

Volume GaussianPrior::vjp(const Volume& x_t, double t, const Volume& v) const {
  require_time(t, "GaussianPrior::vjp");
  require_same_dims(x_t, v, "GaussianPrior::vjp");
  const double a = schedule_.alpha(t);
  const double b = schedule_.beta(t);
  Volume out = v;
  if (!voxel_var_) {
    out.scale_in_place(a * tau2_ / (a * a * tau2_ + b * b));
  } else {
    const Volume& var = *voxel_var_;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] *= a * var[i] / (a * a * var[i] + b * b);
    }
  }
  return out;
}

MixturePrior::MixturePrior(std::vector<Component> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw std::invalid_argument("MixturePrior: need at least one component");
  double wsum = 0.0;
  for (const auto& c : comps_) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("MixturePrior: weights must be positive");
    if (!(c.tau2 > 0.0)) throw std::invalid_argument("MixturePrior: variances must be positive");
    require_same_dims(c.mean, comps_.front().mean, "MixturePrior");
    wsum += c.weight;
  }
  for (auto& c : comps_) c.weight /= wsum;
}

/// Shared per-call quantities: responsibilities r_k, shrinkage c_k, and the
/// marginal variances s_k = alpha^2 tau_k^2 + beta^2.
struct MixturePrior::Eval {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> resp;
  std::vector<double> c;
  std::vector<double> s;
};

MixturePrior::Eval MixturePrior::evaluate(const Volume& x_t, double t) const {
  Eval ev;
  ev.alpha = schedule_.alpha(t);
  ev.beta = schedule_.beta(t);
  const std::size_t kn = comps_.size();
  const std::size_t n = x_t.size();
  ev.resp.resize(kn);
  ev.c.resize(kn);
  ev.s.resize(kn);

  std::vector<double> logits(kn);
  for (std::size_t k = 0; k < kn; ++k) {
    const auto& cp = comps_[k];
    const double s = ev.alpha * ev.alpha * cp.tau2 + ev.beta * ev.beta;
    ev.s[k] = s;
    ev.c[k] = ev.alpha * cp.tau2 / s;
    double d2 = 0.0;
    const double* xd = x_t.data().data();
    const double* md = cp.mean.data().data();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = xd[i] - ev.alpha * md[i];
      d2 += d * d;
    }
    logits[k] = std::log(cp.weight) -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * s) -
                0.5 * d2 / s;
  }
  const double lmax = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < kn; ++k) {
    ev.resp[k] = std::exp(logits[k] - lmax);
    z += ev.resp[k];
  }
  for (double& r : ev.resp) r /= z;
  return ev;
}

Volume MixturePrior::denoise(const Volume& x_t, double t) const {
  require_time(t, "MixturePrior::denoise");
  require_same_dims(x_t, comps_.front().mean, "MixturePrior::denoise");
  const Eval ev = evaluate(x_t, t);

  // mu_0 = sum_k r_k [(1 - c_k alpha) m_k + c_k x].
  double cbar = 0.0;
  for (std::size_t k = 0; k < comps_.size(); ++k) cbar += ev.resp[k] * ev.c[k];
  Volume out = scaled(cbar, x_t);
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const double w = ev.resp[k] * (1.0 - ev.c[k] * ev.alpha);
    if (w != 0.0) out.add_scaled(w, comps_[k].mean);
  }
  return out;
}

Volume MixturePrior::vjp(const Volume& x_t, double t, const Volume& v) const {
  require_time(t, "MixturePrior::vjp");
  require_same_dims(x_t, v, "MixturePrior::vjp");
  require_same_dims(x_t, comps_.front().mean, "MixturePrior::vjp");
  const Eval ev = evaluate(x_t, t);
  const std::size_t kn = comps_.size();

  // d<mu_0, v>/dx = cbar v + sum_k r_k (<mu_0k, v> - <mu_0, v>) g_k,
  // g_k = -(x - alpha m_k)/s_k being the component score of the marginal.
  double cbar = 0.0;
  std::vector<double> mu_k_dot_v(kn);
  double mu_dot_v = 0.0;
  const double xv = dot(x_t, v);
  for (std::size_t k = 0; k < kn; ++k) {
    cbar += ev.resp[k] * ev.c[k];
    mu_k_dot_v[k] = (1.0 - ev.c[k] * ev.alpha) * dot(comps_[k].mean, v) + ev.c[k] * xv;
    mu_dot_v += ev.resp[k] * mu_k_dot_v[k];
  }

  Volume out = scaled(cbar, v);
  double x_coeff = 0.0;
  for (std::size_t k = 0; k < kn; ++k) {
    const double q = ev.resp[k] * (mu_k_dot_v[k] - mu_dot_v);
    if (q == 0.0) continue;
    x_coeff -= q / ev.s[k];
    out.add_scaled(q * ev.alpha / ev.s[k], comps_[k].mean);
  }
  if (x_coeff != 0.0) out.add_scaled(x_coeff, x_t);
  return out;
}

std::vector<double> MixturePrior::responsibilities(const Volume& x_t, double t) const {
  require_time(t, "MixturePrior::responsibilities");
  return evaluate(x_t, t).resp;
}

Volume flow_field(const Prior& prior, const Volume& x_t, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw std::invalid_argument("flow_field: t must lie in (0, 1]");
  }
  const double a = prior.schedule().alpha(t);
  const double b = prior.schedule().beta(t);
  const Volume x0 = prior.denoise(x_t, t);
  // eps_hat = (x_t - alpha x0) / beta; u = eps_hat - x0.
  Volume u = axpy(-a, x0, x_t);
  u.scale_in_place(1.0 / b);
  u.add_scaled(-1.0, x0);
  return u;
}

Volume fd_vjp(const Prior& prior, const Volume& x_t, double t, const Volume& v, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_vjp: h must be positive");
  require_same_dims(x_t, v, "fd_vjp");
  Volume grad(x_t.dims(), x_t.spacing(), 0.0);
  Volume probe = x_t;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double xi = x_t[i];
    probe[i] = xi + h;
    const double fp = dot(prior.denoise(probe, t), v);
    probe[i] = xi - h;
    const double fm = dot(prior.denoise(probe, t), v);
    probe[i] = xi;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace misr
