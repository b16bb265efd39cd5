#include "misr/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "misr/log.hpp"

namespace misr {

namespace {

constexpr double kDivergenceNorm = 1e6;

void validate_measurements(std::span<const Measurement> ms) {
  if (ms.empty()) {
    throw std::invalid_argument("solver: need at least one measurement");
  }
  for (const auto& m : ms) {
    if (!(m.op.hr_dims() == ms.front().op.hr_dims())) {
      throw std::invalid_argument("solver: measurements disagree on HR dims: " +
                                  ms.front().op.hr_dims().str() + " vs " + m.op.hr_dims().str());
    }
  }
}

void validate_config(const SolverConfig& c) {
  if (c.steps < 1) throw std::invalid_argument("SolverConfig: steps must be >= 1");
  if (!(c.zeta > 0.0)) throw std::invalid_argument("SolverConfig: zeta must be positive");
  if (!(c.sigma_floor >= 0.0)) throw std::invalid_argument("SolverConfig: sigma_floor must be >= 0");
  if (c.dmap_inner < 1) throw std::invalid_argument("SolverConfig: dmap_inner must be >= 1");
  if (c.candidates < 1) throw std::invalid_argument("SolverConfig: candidates must be >= 1");
  if (!(c.rho > 0.0)) throw std::invalid_argument("SolverConfig: rho must be positive");
  if (c.admm_iters < 1) throw std::invalid_argument("SolverConfig: admm_iters must be >= 1");
  if (c.cg_iters < 1) throw std::invalid_argument("SolverConfig: cg_iters must be >= 1");
  if (!(c.cg_tol > 0.0)) throw std::invalid_argument("SolverConfig: cg_tol must be positive");
  if (!(c.diffpir_lambda_scale > 0.0)) {
    throw std::invalid_argument("SolverConfig: diffpir_lambda_scale must be positive");
  }
}

WeightVector solver_weights(std::span<const Measurement> ms, const SolverConfig& c) {
  return c.uniform_weights ? uniform_weight_vector(ms.size()) : compute_weights(ms, c.sigma_floor);
}

/// Unnormalized inverse-variance weights. The proximal solvers use these in
/// their quadratic data terms: the sum-to-N normalization is fine for
/// gradient corrections whose step size is renormalized anyway, but it
/// discards the absolute noise scale that the ADMM fixed point balances
/// against the prior.
WeightVector raw_precision_weights(std::span<const Measurement> ms, const SolverConfig& c) {
  if (c.uniform_weights) return uniform_weight_vector(ms.size());
  WeightVector out;
  out.w.reserve(ms.size());
  for (const auto& m : ms) {
    const double den = m.sigma * m.sigma + c.sigma_floor;
    if (!(den > 0.0)) {
      throw std::invalid_argument("weights: sigma^2 + sigma_floor must be positive");
    }
    out.w.push_back(1.0 / den);
  }
  return out;
}

void guard_state(SolverKind kind, const Volume& x, int step) {
  if (!x.all_finite()) {
    throw SolverDivergence(kind, step, std::numeric_limits<double>::quiet_NaN());
  }
  const double nrm = norm2(x);
  if (nrm > kDivergenceNorm) throw SolverDivergence(kind, step, nrm);
}

/// CG on an SPD system; x is the warm start and the result. Returns the
/// iteration count at which the relative residual dropped below tol, or
/// max_iters if it never did.
template <typename Apply>
int cg_solve(const Apply& apply, const Volume& b, Volume& x, int max_iters, double tol) {
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    x.fill(0.0);
    return 0;
  }
  Volume r = sub(b, apply(x));
  Volume p = r;
  double rr = dot(r, r);
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= tol * bnorm) return it;
    const Volume ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) return it;  // lost positive-definiteness to roundoff
    const double step = rr / pap;
    x.add_scaled(step, p);
    r.add_scaled(-step, ap);
    const double rr_next = dot(r, r);
    p.scale_in_place(rr_next / rr);
    p.add_scaled(1.0, r);
    rr = rr_next;
  }
  return max_iters;
}

/// Phi(v) = sum_i w_i A_i^T A_i v + shift * v, the normal operator of the
/// weighted data term plus a quadratic tether.
Volume weighted_normal_apply(std::span<const Measurement> ms, const WeightVector& w, double shift,
                             const Volume& v) {
  Volume out = scaled(shift, v);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    out.add_scaled(w[i], ms[i].op.adjoint(ms[i].op.forward(v)));
  }
  return out;
}

Volume weighted_adjoint_data(std::span<const Measurement> ms, const WeightVector& w) {
  Volume acc(ms.front().op.hr_dims(), ms.front().op.hr_spacing(), 0.0);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    acc.add_scaled(w[i], ms[i].op.adjoint(ms[i].y));
  }
  return acc;
}

}  // namespace

const char* solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::DPS: return "dps";
    case SolverKind::DMAP: return "dmap";
    case SolverKind::DPPS: return "dpps";
    case SolverKind::PnP_ADMM: return "pnp-admm";
    case SolverKind::DiffPIR: return "diffpir";
  }
  return "?";
}

SolverKind solver_from_name(std::string_view name) {
  if (name == "dps") return SolverKind::DPS;
  if (name == "dmap") return SolverKind::DMAP;
  if (name == "dpps") return SolverKind::DPPS;
  if (name == "pnp-admm" || name == "pnp_admm" || name == "admm") return SolverKind::PnP_ADMM;
  if (name == "diffpir") return SolverKind::DiffPIR;
  throw std::invalid_argument("unknown solver '" + std::string(name) +
                              "' (expected dps, dmap, dpps, pnp-admm, or diffpir)");
}

WeightVector compute_weights(std::span<const Measurement> ms, double sigma_floor) {
  if (ms.empty()) throw std::invalid_argument("compute_weights: need at least one measurement");
  WeightVector out;
  out.w.reserve(ms.size());
  double sum = 0.0;
  for (const auto& m : ms) {
    const double den = m.sigma * m.sigma + sigma_floor;
    if (!(den > 0.0)) {
      throw std::invalid_argument("compute_weights: sigma^2 + sigma_floor must be positive");
    }
    out.w.push_back(1.0 / den);
    sum += out.w.back();
  }
  const double scale = static_cast<double>(ms.size()) / sum;
  for (double& w : out.w) w *= scale;
  return out;
}

WeightVector uniform_weight_vector(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_weight_vector: n must be >= 1");
  WeightVector out;
  out.w.assign(n, 1.0);
  return out;
}

double step_size(double zeta, double weighted_residual_energy) {
  return zeta / std::sqrt(weighted_residual_energy + 1e-12);
}

double weighted_residual_energy(const Volume& mu0, std::span<const Measurement> ms,
                                const WeightVector& weights) {
  double energy = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Volume r = sub(ms[i].op.forward(mu0), ms[i].y);
    energy += weights[i] * dot(r, r);
  }
  return energy;
}

GradientEval likelihood_gradient_at(const Prior& prior, const Volume& x_t, double t,
                                    std::span<const Measurement> ms, const WeightVector& weights,
                                    const Volume& mu0, bool unsquared) {
  validate_measurements(ms);
  if (weights.size() != ms.size()) {
    throw std::invalid_argument("likelihood_gradient: weight count does not match measurements");
  }
  GradientEval out;
  out.residual_norms.reserve(ms.size());
  Volume v(ms.front().op.hr_dims(), ms.front().op.hr_spacing(), 0.0);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Volume r = sub(ms[i].op.forward(mu0), ms[i].y);
    const double rn2 = dot(r, r);
    out.residual_norms.push_back(std::sqrt(rn2));
    out.residual_energy += weights[i] * rn2;
    const double coef =
        unsquared ? weights[i] / std::max(out.residual_norms.back(), 1e-12) : 2.0 * weights[i];
    v.add_scaled(coef, ms[i].op.adjoint(r));
  }
  out.grad = prior.vjp(x_t, t, v);
  return out;
}

Volume likelihood_gradient(const Prior& prior, const Volume& x_t, double t,
                           std::span<const Measurement> ms, const WeightVector& weights) {
  const Volume mu0 = prior.denoise(x_t, t);
  return likelihood_gradient_at(prior, x_t, t, ms, weights, mu0).grad;
}

Volume ddim_step_from_mu0(const FlowSchedule& sched, const Volume& x_t, const Volume& mu0,
                          double t, double s) {
  if (!(s >= 0.0 && s <= t && t <= 1.0)) {
    throw std::invalid_argument("ddim_step: need 0 <= s <= t <= 1");
  }
  if (t == 0.0) return mu0;
  const double bt = sched.beta(t);
  const double bs = sched.beta(s);
  const double cx = bs / bt;
  const double cm = sched.alpha(s) - cx * sched.alpha(t);
  Volume out = scaled(cx, x_t);
  out.add_scaled(cm, mu0);
  return out;
}

DdimResult ddim_step(const Prior& prior, const Volume& x_t, double t, double s) {
  if (t == 0.0) {
    Volume mu0 = prior.denoise(x_t, 0.0);
    return {mu0, mu0};
  }
  Volume mu0 = prior.denoise(x_t, t);
  Volume x_s = ddim_step_from_mu0(prior.schedule(), x_t, mu0, t, s);
  return {std::move(x_s), std::move(mu0)};
}

Volume ddim_step_stochastic(const FlowSchedule& sched, const Volume& x_t, const Volume& mu0,
                            double t, double s, double eta, SeededRng& rng) {
  if (!(s >= 0.0 && s <= t && t <= 1.0)) {
    throw std::invalid_argument("ddim_step_stochastic: need 0 <= s <= t <= 1");
  }
  if (t == 0.0) return mu0;
  const double at = sched.alpha(t);
  const double bt = sched.beta(t);
  const double as = sched.alpha(s);
  const double bs = sched.beta(s);
  double sig = 0.0;
  if (eta > 0.0 && bs > 0.0 && as > 0.0) {
    const double ratio = (at * bs) / (as * bt);
    sig = eta * bs * std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
  }
  const double det = std::sqrt(std::max(0.0, bs * bs - sig * sig));
  const double cx = det / bt;
  const double cm = as - cx * at;
  Volume out = scaled(cx, x_t);
  out.add_scaled(cm, mu0);
  if (sig > 0.0) {
    const Volume z = sample_standard_normal(rng, x_t.dims(), x_t.spacing());
    out.add_scaled(sig, z);
  }
  return out;
}

Volume dmap_shell_project(const Volume& x_s, const Volume& mu_s, double radius, bool literal) {
  const Volume diff = sub(x_s, mu_s);
  const double nd = norm2(diff);
  if (nd < 1e-12) return x_s;  // degenerate direction: skip
  Volume out = mu_s;
  if (literal) {
    out.add_scaled(-radius / (nd * nd), diff);
  } else {
    out.add_scaled(radius / nd, diff);
  }
  return out;
}

SolverDivergence::SolverDivergence(SolverKind kind, int step, double norm)
    : std::runtime_error(std::string(solver_name(kind)) + " diverged at step " +
                         std::to_string(step) + " (||x|| = " + std::to_string(norm) + ")"),
      step_(step) {}

Volume solve_dps(const Prior& prior, std::span<const Measurement> ms, const SolverConfig& config,
                 SolveTrace* trace) {
  validate_measurements(ms);
  validate_config(config);
  const WeightVector w = solver_weights(ms, config);
  const FlowSchedule& sched = prior.schedule();
  const int T = config.steps;

  SeededRng rng(config.seed);
  Volume x = sample_standard_normal(rng, ms.front().op.hr_dims(), ms.front().op.hr_spacing());
  for (int j = 0; j < T; ++j) {
    const double t = static_cast<double>(T - j) / T;
    const double s = static_cast<double>(T - j - 1) / T;
    const Volume mu0 = prior.denoise(x, t);
    const GradientEval ge =
        likelihood_gradient_at(prior, x, t, ms, w, mu0, config.unsquared_gradient);
    Volume x_s = ddim_step_from_mu0(sched, x, mu0, t, s);
    x_s.add_scaled(-step_size(config.zeta, ge.residual_energy), ge.grad);
    guard_state(SolverKind::DPS, x_s, j);
    if (trace) trace->residual_energy.push_back(ge.residual_energy);
    x = std::move(x_s);
  }
  return x;
}

Volume solve_dmap(const Prior& prior, std::span<const Measurement> ms, const SolverConfig& config,
                  SolveTrace* trace) {
  validate_measurements(ms);
  validate_config(config);
  const WeightVector w = solver_weights(ms, config);
  const FlowSchedule& sched = prior.schedule();
  const int T = config.steps;

  SeededRng rng(config.seed);
  Volume x = sample_standard_normal(rng, ms.front().op.hr_dims(), ms.front().op.hr_spacing());
  const double d = config.dmap_d > 0.0 ? config.dmap_d : static_cast<double>(x.size());
  const double sqrt_d = std::sqrt(d);

  for (int j = 0; j < T; ++j) {
    const double t = static_cast<double>(T - j) / T;
    const double s = static_cast<double>(T - j - 1) / T;
    const Volume mu0 = prior.denoise(x, t);
    Volume x_s = ddim_step_from_mu0(sched, x, mu0, t, s);
    const Volume mu_s = x_s;  // eta = 0: the sampled state is its own mean
    const double radius = sqrt_d * sched.beta(s);

    for (int inner = 0; inner < config.dmap_inner; ++inner) {
      const Volume mu0_s = prior.denoise(x_s, s);
      const GradientEval ge =
          likelihood_gradient_at(prior, x_s, s, ms, w, mu0_s, config.unsquared_gradient);
      x_s.add_scaled(-step_size(config.zeta, ge.residual_energy), ge.grad);
      x_s = dmap_shell_project(x_s, mu_s, radius, config.dmap_literal_update);
      if (trace && inner == 0) trace->residual_energy.push_back(ge.residual_energy);
    }
    guard_state(SolverKind::DMAP, x_s, j);
    x = std::move(x_s);
  }
  return x;
}

Volume solve_dpps(const Prior& prior, std::span<const Measurement> ms, const SolverConfig& config,
                  SolveTrace* trace) {
  validate_measurements(ms);
  validate_config(config);
  const WeightVector w = solver_weights(ms, config);
  const FlowSchedule& sched = prior.schedule();
  const int T = config.steps;

  SeededRng rng(config.seed);
  Volume x = sample_standard_normal(rng, ms.front().op.hr_dims(), ms.front().op.hr_spacing());
  Volume mu0 = prior.denoise(x, 1.0);

  for (int j = 0; j < T; ++j) {
    const double t = static_cast<double>(T - j) / T;
    const double s = static_cast<double>(T - j - 1) / T;
    const GradientEval ge =
        likelihood_gradient_at(prior, x, t, ms, w, mu0, config.unsquared_gradient);
    const double zeta_t = step_size(config.zeta, ge.residual_energy);

    Volume best_x, best_mu0;
    double best_score = 0.0;
    for (int c = 0; c < config.candidates; ++c) {
      Volume cand = ddim_step_stochastic(sched, x, mu0, t, s, 1.0, rng);
      cand.add_scaled(-zeta_t, ge.grad);
      Volume cand_mu0 = prior.denoise(cand, s);
      const double score = weighted_residual_energy(cand_mu0, ms, w);
      if (c == 0 || score < best_score) {  // strict <: ties keep the lowest index
        best_score = score;
        best_x = std::move(cand);
        best_mu0 = std::move(cand_mu0);
      }
    }
    guard_state(SolverKind::DPPS, best_x, j);
    if (trace) trace->residual_energy.push_back(best_score);
    x = std::move(best_x);
    mu0 = std::move(best_mu0);
  }
  return x;
}

Volume solve_pnp_admm(const Prior& prior, std::span<const Measurement> ms,
                      const SolverConfig& config, SolveTrace* trace) {
  validate_measurements(ms);
  validate_config(config);
  const WeightVector w = raw_precision_weights(ms, config);
  const FlowSchedule& sched = prior.schedule();

  // The z-update runs the denoiser as the exact proximal map of the prior at
  // noise std 1/sqrt(rho): feed alpha_eff*(x+u) at the t where beta/alpha
  // matches that std, so the splitting variable stays in data space.
  const double t_eff = std::clamp(1.0 / (1.0 + std::sqrt(config.rho)), 0.02, 0.98);
  const double alpha_eff = sched.alpha(t_eff);

  Volume x(ms.front().op.hr_dims(), ms.front().op.hr_spacing(), 0.0);
  Volume z = x;
  Volume u = x;
  const Volume rhs_data = weighted_adjoint_data(ms, w);
  const auto normal = [&](const Volume& v) {
    return weighted_normal_apply(ms, w, 0.5 * config.rho, v);
  };

  for (int it = 0; it < config.admm_iters; ++it) {
    Volume rhs = rhs_data;
    rhs.add_scaled(0.5 * config.rho, sub(z, u));
    const int used = cg_solve(normal, rhs, x, config.cg_iters, config.cg_tol);
    if (trace) trace->cg_total_iters += static_cast<std::size_t>(used);
    if (used >= config.cg_iters) {
      log_debug("pnp-admm: CG hit the iteration cap at outer iteration " + std::to_string(it));
    }
    if (!x.all_finite()) {
      throw SolverDivergence(SolverKind::PnP_ADMM, it, std::numeric_limits<double>::quiet_NaN());
    }
    Volume xpu = x;
    xpu.add_scaled(1.0, u);
    xpu.scale_in_place(alpha_eff);
    z = prior.denoise(xpu, t_eff);
    u.add_scaled(1.0, x);
    u.add_scaled(-1.0, z);
    if (trace) trace->data_residual.push_back(std::sqrt(weighted_residual_energy(x, ms, w)));
  }
  guard_state(SolverKind::PnP_ADMM, z, config.admm_iters - 1);
  return z;
}

Volume solve_diffpir(const Prior& prior, std::span<const Measurement> ms,
                     const SolverConfig& config, SolveTrace* trace) {
  validate_measurements(ms);
  validate_config(config);
  const WeightVector w = solver_weights(ms, config);
  const FlowSchedule& sched = prior.schedule();
  const int T = config.steps;

  SeededRng rng(config.seed);
  Volume x = sample_standard_normal(rng, ms.front().op.hr_dims(), ms.front().op.hr_spacing());
  const Volume rhs_data = weighted_adjoint_data(ms, w);

  for (int j = 0; j < T; ++j) {
    const double t = static_cast<double>(T - j) / T;
    const double s = static_cast<double>(T - j - 1) / T;
    const Volume x0 = prior.denoise(x, t);

    double lambda = config.diffpir_lambda_override;
    if (!(lambda > 0.0)) {
      const double a = sched.alpha(t);
      const double b = sched.beta(t);
      const double ratio = (b * b) / std::max(a * a, 1e-300);
      lambda = std::clamp(config.diffpir_lambda_scale * ratio, 1e-4, 1e4);
    }

    // Proximal replacement of x0: argmin_z sum_i w_i ||A_i z - y_i||^2 + lambda ||z - x0||^2.
    Volume rhs = rhs_data;
    rhs.add_scaled(lambda, x0);
    const auto normal = [&](const Volume& v) { return weighted_normal_apply(ms, w, lambda, v); };
    Volume z = x0;
    const int used = cg_solve(normal, rhs, z, config.cg_iters, config.cg_tol);
    if (trace) trace->cg_total_iters += static_cast<std::size_t>(used);
    if (used >= config.cg_iters) {
      log_debug("diffpir: CG hit the iteration cap at step " + std::to_string(j));
    }
    if (!z.all_finite()) {
      throw SolverDivergence(SolverKind::DiffPIR, j, std::numeric_limits<double>::quiet_NaN());
    }

    Volume x_s = ddim_step_from_mu0(sched, x, z, t, s);
    guard_state(SolverKind::DiffPIR, x_s, j);
    if (trace) trace->residual_energy.push_back(weighted_residual_energy(z, ms, w));
    x = std::move(x_s);
  }
  return x;
}

Volume solve(const Prior& prior, std::span<const Measurement> ms, const SolverConfig& config,
             SolveTrace* trace) {
  switch (config.solver) {
    case SolverKind::DPS: return solve_dps(prior, ms, config, trace);
    case SolverKind::DMAP: return solve_dmap(prior, ms, config, trace);
    case SolverKind::DPPS: return solve_dpps(prior, ms, config, trace);
    case SolverKind::PnP_ADMM: return solve_pnp_admm(prior, ms, config, trace);
    case SolverKind::DiffPIR: return solve_diffpir(prior, ms, config, trace);
  }
  throw std::invalid_argument("solve: unknown solver kind");
}

}  // namespace misr
