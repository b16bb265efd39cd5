#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "misr/operators.hpp"
#include "misr/priors.hpp"
#include "misr/rng.hpp"

namespace misr {

enum class SolverKind { DPS, DMAP, DPPS, PnP_ADMM, DiffPIR };

const char* solver_name(SolverKind kind);
SolverKind solver_from_name(std::string_view name);

struct SolverConfig {
  SolverKind solver = SolverKind::DPS;
  int steps = 64;             // reverse-diffusion steps T
  double zeta = 1.0;          // base step size, made dimensionless by step_size()
  double sigma_floor = 0.01;  // added to sigma_i^2 in the weight rule
  int dmap_inner = 3;         // K inner refinement iterations
  double dmap_d = 0.0;        // shell dimension d; 0 = voxel count
  bool dmap_literal_update = false;  // divide by ||.||^2 with minus sign, as printed
  int candidates = 4;         // DPPS proposals per step
  double rho = 1.0;           // ADMM penalty
  int admm_iters = 30;
  int cg_iters = 50;
  double cg_tol = 1e-8;
  double diffpir_lambda_scale = 1.0;     // multiplies beta^2/alpha^2
  double diffpir_lambda_override = 0.0;  // > 0: fixed proximal weight, unclamped
  bool unsquared_gradient = false;       // grad of ||r|| instead of ||r||^2
  bool uniform_weights = false;          // w_i = 1 (noise-weighting ablation)
  std::uint64_t seed = 0;
};

/// Inverse-variance measurement weights, normalized so they sum to N.
struct WeightVector {
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }
};

/// w_i = (sigma_i^2 + sigma_floor)^-1, then scaled so sum w_i = N.
WeightVector compute_weights(std::span<const Measurement> measurements, double sigma_floor);
WeightVector uniform_weight_vector(std::size_t n);

/// zeta_t = zeta / sqrt(E + 1e-12) with E the weighted residual energy;
/// keeps the correction magnitude scale-invariant.
double step_size(double zeta, double weighted_residual_energy);

/// sum_i w_i ||A_i mu0 - y_i||^2.
double weighted_residual_energy(const Volume& mu0, std::span<const Measurement> measurements,
                                const WeightVector& weights);

struct GradientEval {
  Volume grad;
  double residual_energy = 0.0;          // sum_i w_i ||r_i||^2
  std::vector<double> residual_norms;    // ||r_i||
};

/// Per-measurement data-consistency gradient at x_t, chained through the
/// prior's VJP. mu0 is supplied by the caller so one denoise evaluation per
/// step serves all N measurements; the per-measurement adjoint corrections
/// are aggregated before the single VJP, which is exact by VJP linearity.
GradientEval likelihood_gradient_at(const Prior& prior, const Volume& x_t, double t,
                                    std::span<const Measurement> measurements,
                                    const WeightVector& weights, const Volume& mu0,
                                    bool unsquared = false);

/// Convenience form that evaluates mu0 itself (one denoise call).
Volume likelihood_gradient(const Prior& prior, const Volume& x_t, double t,
                           std::span<const Measurement> measurements,
                           const WeightVector& weights);

struct DdimResult {
  Volume x_s;
  Volume mu0;
};

/// Deterministic (eta = 0) reverse step from level t to s < t, returning the
/// moved state and the denoised estimate it was built from.
DdimResult ddim_step(const Prior& prior, const Volume& x_t, double t, double s);

/// Same step given a precomputed mu0. At t = 0 the state already is data and
/// mu0 is returned outright.
Volume ddim_step_from_mu0(const FlowSchedule& sched, const Volume& x_t, const Volume& mu0,
                          double t, double s);

/// eta > 0 trades deterministic mass for ancestral noise:
/// x_s = alpha_s mu0 + sqrt(beta_s^2 - sig^2) eps_hat + sig z with
/// sig = eta beta_s sqrt(1 - (alpha_t beta_s / (alpha_s beta_t))^2).
/// Draws from rng only when sig > 0.
Volume ddim_step_stochastic(const FlowSchedule& sched, const Volume& x_t, const Volume& mu0,
                            double t, double s, double eta, SeededRng& rng);

/// Pulls x_s back onto the sphere of radius `radius` around mu_s. The literal
/// variant applies the as-printed rule mu_s - radius (x_s - mu_s)/||x_s - mu_s||^2.
Volume dmap_shell_project(const Volume& x_s, const Volume& mu_s, double radius, bool literal);

/// Thrown when an iterate blows past the divergence guard.
class SolverDivergence : public std::runtime_error {
public:
  SolverDivergence(SolverKind kind, int step, double norm);
  int step() const { return step_; }

private:
  int step_;
};

/// Optional per-iteration diagnostics; pass nullptr to skip collection.
struct SolveTrace {
  std::vector<double> residual_energy;  // weighted residual energy per outer step
  std::vector<double> data_residual;    // ADMM: sqrt(energy) after each x-update
  std::size_t cg_total_iters = 0;
};

Volume solve_dps(const Prior& prior, std::span<const Measurement> measurements,
                 const SolverConfig& config, SolveTrace* trace = nullptr);
Volume solve_dmap(const Prior& prior, std::span<const Measurement> measurements,
                  const SolverConfig& config, SolveTrace* trace = nullptr);
Volume solve_dpps(const Prior& prior, std::span<const Measurement> measurements,
                  const SolverConfig& config, SolveTrace* trace = nullptr);

/// ADMM splitting with the denoiser as the proximal prior step. Unlike the
/// gradient solvers, the quadratic data term here uses unnormalized
/// inverse-variance weights (sigma_i^2 + sigma_floor)^-1: step-size
/// renormalization is absent, so the fixed point needs the absolute noise
/// scale to balance data against the prior.
Volume solve_pnp_admm(const Prior& prior, std::span<const Measurement> measurements,
                      const SolverConfig& config, SolveTrace* trace = nullptr);
Volume solve_diffpir(const Prior& prior, std::span<const Measurement> measurements,
                     const SolverConfig& config, SolveTrace* trace = nullptr);

/// Dispatch on config.solver.
Volume solve(const Prior& prior, std::span<const Measurement> measurements,
             const SolverConfig& config, SolveTrace* trace = nullptr);

}  // namespace misr
