#include <doctest.h>

#include <cmath>

#include "misr/phantom.hpp"
#include "misr/samplers.hpp"
#include "oracles.hpp"

using namespace misr;

namespace {

Volume random_volume(Dims dims, std::uint64_t seed, double scale = 1.0) {
  SeededRng rng(seed);
  Volume v = sample_standard_normal(rng, dims);
  v.scale_in_place(scale);
  return v;
}

std::vector<Measurement> orthogonal_measurements(const Volume& truth, int n_views, int k,
                                                 double sigma_base, std::uint64_t seed) {
  const Axis axes_all[3] = {Axis::Z, Axis::Y, Axis::X};
  std::vector<Axis> axes(axes_all, axes_all + n_views);
  std::vector<int> ks(static_cast<std::size_t>(n_views), k);
  return degrade(truth, axes, ks, sigma_base, SeededRng(seed));
}

}  // namespace

TEST_CASE("compute_weights follows the inverse-variance rule") {
  const Volume truth = random_volume({16, 16, 16}, 1, 0.3);

  SUBCASE("equal sigmas normalize to ones") {
    const auto ms = orthogonal_measurements(truth, 3, 4, 0.1, 2);
    const WeightVector w = compute_weights(ms, 0.0);
    for (double wi : w.w) CHECK(wi == doctest::Approx(1.0).epsilon(1e-12));
    double sum = 0.0;
    for (double wi : w.w) sum += wi;
    CHECK(std::abs(sum - 3.0) <= 1e-12);
  }

  SUBCASE("mixed 4x/16x example") {
    std::vector<Measurement> ms;
    {
      SeededRng r(3);
      ms.push_back(simulate_measurement(truth, Axis::Z, 4, 0.1, r));
      ms.push_back(simulate_measurement(truth, Axis::Y, 16, 0.1, r));
    }
    CHECK(ms[0].sigma == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(ms[1].sigma == doctest::Approx(0.00625).epsilon(1e-15));
    const WeightVector w = compute_weights(ms, 0.0);
    // raw weights (1600, 25600) normalized to sum 2
    CHECK(w[0] == doctest::Approx(2.0 * 1600.0 / 27200.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(2.0 * 25600.0 / 27200.0).epsilon(1e-12));
    CHECK(std::abs(w[0] + w[1] - 2.0) <= 1e-12);
  }

  SUBCASE("large floor flattens the weights") {
    std::vector<Measurement> ms;
    {
      SeededRng r(4);
      ms.push_back(simulate_measurement(truth, Axis::Z, 4, 0.1, r));
      ms.push_back(simulate_measurement(truth, Axis::Y, 16, 0.1, r));
    }
    const WeightVector w = compute_weights(ms, 1e6);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("zero sigma with zero floor is rejected") {
    std::vector<Measurement> ms;
    SeededRng r(5);
    ms.push_back(simulate_measurement(truth, Axis::Z, 4, 0.0, r));
    CHECK_THROWS_AS(compute_weights(ms, 0.0), std::invalid_argument);
  }
}

TEST_CASE("step_size scaling") {
  CHECK(step_size(1.0, 0.0) == doctest::Approx(1e6).epsilon(1e-9));
  const double one = step_size(0.7, 1.0);
  const double two = step_size(0.7, 2.0);
  CHECK(two / one == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  // frozen regression value
  CHECK(step_size(1.0, 3.7) == doctest::Approx(0.5198752449099661).epsilon(1e-15));
}

TEST_CASE("likelihood gradient basics") {
  const Dims dims{12, 12, 12};
  const Volume truth = random_volume(dims, 6, 0.3);
  const GaussianPrior prior(random_volume(dims, 7, 0.3), 0.04);
  const double t = 0.4;
  const Volume x_t = random_volume(dims, 8, 0.5);

  SUBCASE("zero residual gives zero gradient") {
    const Volume mu0 = prior.denoise(x_t, t);
    std::vector<Measurement> ms;
    SliceProfileOperator op(Axis::Z, 2, dims);
    Volume y = op.forward(mu0);  // consistent by construction
    ms.emplace_back(std::move(y), std::move(op), 0.1);
    const WeightVector w = compute_weights(ms, 0.01);
    const auto ge = likelihood_gradient_at(prior, x_t, t, ms, w, mu0);
    CHECK(norm2(ge.grad) <= 1e-12);
    CHECK(ge.residual_energy <= 1e-20);
  }

  SUBCASE("single measurement reduces to the plain correction") {
    const auto ms = orthogonal_measurements(truth, 1, 2, 0.1, 9);
    const WeightVector w = compute_weights(ms, 0.01);
    const Volume grad = likelihood_gradient(prior, x_t, t, ms, w);

    const Volume mu0 = prior.denoise(x_t, t);
    const Volume r = sub(ms[0].op.forward(mu0), ms[0].y);
    const Volume want = prior.vjp(x_t, t, scaled(2.0 * w[0], ms[0].op.adjoint(r)));
    CHECK(testing::rel_err_norm(grad, want) <= 1e-13);
  }

  SUBCASE("unsquared flag rescales each term by 1/(2||r||)") {
    const auto ms = orthogonal_measurements(truth, 1, 2, 0.1, 10);
    const WeightVector w = compute_weights(ms, 0.01);
    const Volume mu0 = prior.denoise(x_t, t);
    const auto sq = likelihood_gradient_at(prior, x_t, t, ms, w, mu0, false);
    const auto un = likelihood_gradient_at(prior, x_t, t, ms, w, mu0, true);
    const Volume want = scaled(1.0 / (2.0 * sq.residual_norms[0]), sq.grad);
    CHECK(testing::rel_err_norm(un.grad, want) <= 1e-12);
  }
}

TEST_CASE("per-measurement gradient sum equals the stacked-operator gradient") {
  const Dims dims{12, 12, 12};
  const Volume truth = random_volume(dims, 11, 0.3);
  const double t = 0.35;
  const Volume x_t = random_volume(dims, 12, 0.4);

  std::vector<MixturePrior::Component> comps;
  comps.push_back({0.5, random_volume(dims, 13, 0.2), 0.0025});
  comps.push_back({0.5, random_volume(dims, 14, 0.2), 0.0025});
  const MixturePrior mixture(comps);
  const GaussianPrior gaussian(random_volume(dims, 15, 0.2), 0.0025);

  const auto ms = orthogonal_measurements(truth, 2, 2, 0.1, 16);
  const WeightVector w = compute_weights(ms, 0.01);

  for (const Prior* prior : {static_cast<const Prior*>(&mixture),
                             static_cast<const Prior*>(&gaussian)}) {
    const Volume mu0 = prior->denoise(x_t, t);

    // per-measurement path: independent VJP per operator, then summed
    Volume per_sum(dims, x_t.spacing(), 0.0);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const Volume r = sub(ms[i].op.forward(mu0), ms[i].y);
      per_sum.add_scaled(1.0, prior->vjp(x_t, t, scaled(2.0 * w[i], ms[i].op.adjoint(r))));
    }

    // stacked path: one joint residual pushed through the explicit stack
    std::vector<SliceProfileOperator> ops;
    for (const auto& m : ms) ops.push_back(m.op);
    const StackedOperator stacked(ops);
    auto ys = stacked.forward(mu0);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      ys[i].add_scaled(-1.0, ms[i].y);
      ys[i].scale_in_place(2.0 * w[i]);
    }
    const Volume stacked_grad = prior->vjp(x_t, t, stacked.adjoint(ys));

    CHECK(testing::rel_err_norm(per_sum, stacked_grad) <= 1e-12);

    // and the library path agrees with both
    const auto ge = likelihood_gradient_at(*prior, x_t, t, ms, w, mu0);
    CHECK(testing::rel_err_norm(ge.grad, stacked_grad) <= 1e-12);
  }
}

TEST_CASE("ddim step identities") {
  const Dims dims{6, 6, 6};
  const GaussianPrior prior(random_volume(dims, 17, 0.3), 0.09);
  const Volume x = random_volume(dims, 18);

  SUBCASE("s == t returns the state unchanged") {
    const Volume mu0 = prior.denoise(x, 0.5);
    const Volume same = ddim_step_from_mu0(prior.schedule(), x, mu0, 0.5, 0.5);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);
  }

  SUBCASE("s == 0 returns the denoised estimate") {
    const auto res = ddim_step(prior, x, 0.5, 0.0);
    const Volume want = prior.denoise(x, 0.5);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(res.x_s[i] == doctest::Approx(want[i]).epsilon(1e-14));
    }
  }

  SUBCASE("t == 0 guard returns the state itself") {
    const auto res = ddim_step(prior, x, 0.0, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(res.x_s[i] == x[i]);
  }

  SUBCASE("invalid ordering is rejected") {
    const Volume mu0 = prior.denoise(x, 0.5);
    CHECK_THROWS_AS(ddim_step_from_mu0(prior.schedule(), x, mu0, 0.5, 0.7),
                    std::invalid_argument);
  }
}

TEST_CASE("a full ddim trajectory matches the composed affine map") {
  const Dims dims{8, 8, 8};
  const double tau2 = 0.04;
  const Volume m = random_volume(dims, 19, 0.3);
  const GaussianPrior prior(m, tau2);
  const FlowSchedule& sched = prior.schedule();

  SeededRng rng(20);
  Volume x = sample_standard_normal(rng, dims);
  const Volume x1 = x;

  const int T = 64;
  double p = 1.0, q = 0.0;  // x_j = p x_1 + q m, composed step by step in scalars
  for (int j = 0; j < T; ++j) {
    const double t = static_cast<double>(T - j) / T;
    const double s = static_cast<double>(T - j - 1) / T;
    const auto res = ddim_step(prior, x, t, s);
    x = res.x_s;

    const double at = sched.alpha(t), bt = sched.beta(t);
    const double as = sched.alpha(s), bs = sched.beta(s);
    const double c = at * tau2 / (at * at * tau2 + bt * bt);
    const double cx = bs / bt;
    const double cm = as - cx * at;
    const double A = cx + cm * c;          // coefficient on x_t
    const double B = cm * (1.0 - c * at);  // coefficient on m
    q = A * q + B;
    p = A * p;
  }
  Volume want = scaled(p, x1);
  want.add_scaled(q, m);
  CHECK(testing::rel_err_norm(x, want) <= 1e-6);
}

TEST_CASE("stochastic ddim with eta=0 is the deterministic step") {
  const Dims dims{6, 6, 6};
  const GaussianPrior prior(random_volume(dims, 21, 0.3), 0.04);
  const Volume x = random_volume(dims, 22);
  const Volume mu0 = prior.denoise(x, 0.6);
  SeededRng rng(23);
  const Volume a = ddim_step_stochastic(prior.schedule(), x, mu0, 0.6, 0.4, 0.0, rng);
  const Volume b = ddim_step_from_mu0(prior.schedule(), x, mu0, 0.6, 0.4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // landing at s = 0 is deterministic even with eta = 1
  SeededRng rng2(24);
  const Volume c = ddim_step_stochastic(prior.schedule(), x, mu0, 0.6, 0.0, 1.0, rng2);
  const Volume d = ddim_step_from_mu0(prior.schedule(), x, mu0, 0.6, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == d[i]);
}

TEST_CASE("dmap shell projection") {
  const Dims dims{5, 5, 5};
  const Volume mu = random_volume(dims, 25, 0.3);

  SUBCASE("idempotent on the shell") {
    Volume x = mu;
    const Volume dir = random_volume(dims, 26);
    const double radius = 3.7;
    x.add_scaled(radius / norm2(dir), dir);  // exactly at distance radius
    const Volume proj = dmap_shell_project(x, mu, radius, false);
    CHECK(testing::rel_err_norm(proj, x) <= 1e-12);
    CHECK(norm2(sub(proj, mu)) == doctest::Approx(radius).epsilon(1e-12));
  }

  SUBCASE("as-printed variant stays finite") {
    Volume x = mu;
    x.add_scaled(1e-3, random_volume(dims, 27));
    const Volume proj = dmap_shell_project(x, mu, 2.0, true);
    CHECK(proj.all_finite());
  }

  SUBCASE("degenerate direction is passed through") {
    const Volume proj = dmap_shell_project(mu, mu, 2.0, false);
    for (std::size_t i = 0; i < proj.size(); ++i) CHECK(proj[i] == mu[i]);
  }
}

TEST_CASE("denoise-call count of solve_dps equals T for any measurement count") {
  const Dims dims{12, 12, 12};
  const Volume truth = random_volume(dims, 28, 0.3);
  const GaussianPrior inner(random_volume(dims, 29, 0.3), 0.04);

  SolverConfig cfg;
  cfg.steps = 12;
  cfg.seed = 30;
  for (int n_views : {1, 2, 3}) {
    const auto ms = orthogonal_measurements(truth, n_views, 2, 0.1, 31);
    CountingPrior counting(inner);
    (void)solve_dps(counting, ms, cfg);
    CHECK(counting.denoise_calls() == static_cast<std::size_t>(cfg.steps));
  }
}

TEST_CASE("solvers are deterministic under a fixed seed") {
  const Dims dims{12, 12, 12};
  const Volume truth = random_volume(dims, 32, 0.3);
  const GaussianPrior prior(random_volume(dims, 33, 0.3), 0.04);
  const auto ms = orthogonal_measurements(truth, 2, 2, 0.1, 34);

  SolverConfig cfg;
  cfg.steps = 8;
  cfg.admm_iters = 5;
  cfg.candidates = 2;
  cfg.seed = 35;
  for (SolverKind kind : {SolverKind::DPS, SolverKind::DMAP, SolverKind::DPPS,
                          SolverKind::PnP_ADMM, SolverKind::DiffPIR}) {
    cfg.solver = kind;
    const Volume a = solve(prior, ms, cfg);
    const Volume b = solve(prior, ms, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == b[i]);
    }
  }
}

TEST_CASE("divergence guard names the failing step") {
  const Dims dims{8, 8, 8};
  const Volume truth = random_volume(dims, 36, 0.3);
  const GaussianPrior prior(random_volume(dims, 37, 0.3), 1.0);
  const auto ms = orthogonal_measurements(truth, 1, 2, 0.1, 38);

  SolverConfig cfg;
  cfg.steps = 4;
  cfg.zeta = 1e12;
  cfg.seed = 39;
  try {
    (void)solve_dps(prior, ms, cfg);
    FAIL("expected SolverDivergence");
  } catch (const SolverDivergence& ex) {
    CHECK(ex.step() >= 0);
    CHECK(std::string(ex.what()).find("diverged at step") != std::string::npos);
  }
}

TEST_CASE("dpps candidate scoring uses the weighted multi-measurement distance") {
  const Dims dims{16, 16, 16};
  const Volume truth = random_volume(dims, 40, 0.3);

  std::vector<Measurement> both;
  {
    SeededRng r(41);
    both.push_back(simulate_measurement(truth, Axis::Z, 4, 0.1, r));
    both.push_back(simulate_measurement(truth, Axis::Y, 16, 100.0, r));  // huge-noise view
  }
  const std::vector<Measurement> only_first(both.begin(), both.begin() + 1);

  const WeightVector w_both = compute_weights(both, 0.01);
  const WeightVector w_first = compute_weights(only_first, 0.01);
  CHECK(w_both[1] < 1e-3);  // the noisy view carries almost no weight

  // rigged candidates with distinct residuals
  std::vector<Volume> candidates;
  candidates.push_back(random_volume(dims, 42, 0.5));
  candidates.push_back(truth);  // exactly consistent up to noise: clear winner
  candidates.push_back(random_volume(dims, 43, 0.8));

  std::size_t best_both = 0, best_first = 0;
  double score_both = 0.0, score_first = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double sb = weighted_residual_energy(candidates[c], both, w_both);
    const double sf = weighted_residual_energy(candidates[c], only_first, w_first);
    if (c == 0 || sb < score_both) {
      score_both = sb;
      best_both = c;
    }
    if (c == 0 || sf < score_first) {
      score_first = sf;
      best_first = c;
    }
  }
  CHECK(best_both == 1);
  CHECK(best_both == best_first);  // the huge-sigma view does not flip the argmin
}

TEST_CASE("solver names round trip") {
  for (SolverKind kind : {SolverKind::DPS, SolverKind::DMAP, SolverKind::DPPS,
                          SolverKind::PnP_ADMM, SolverKind::DiffPIR}) {
    CHECK(solver_from_name(solver_name(kind)) == kind);
  }
  CHECK_THROWS_AS(solver_from_name("nope"), std::invalid_argument);
}

TEST_CASE("solver config validation") {
  const Dims dims{8, 8, 8};
  const Volume truth = random_volume(dims, 44, 0.3);
  const GaussianPrior prior(random_volume(dims, 45, 0.3), 0.04);
  const auto ms = orthogonal_measurements(truth, 1, 2, 0.1, 46);

  SolverConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(solve_dps(prior, ms, cfg), std::invalid_argument);
  cfg.steps = 4;
  cfg.candidates = 0;
  CHECK_THROWS_AS(solve_dpps(prior, ms, cfg), std::invalid_argument);
  CHECK_THROWS_AS(solve_dps(prior, {}, cfg), std::invalid_argument);

  // measurements over different HR grids are rejected
  cfg.candidates = 4;
  std::vector<Measurement> mixed = orthogonal_measurements(truth, 1, 2, 0.1, 47);
  const Volume other = random_volume({12, 12, 12}, 48, 0.3);
  auto extra = orthogonal_measurements(other, 1, 2, 0.1, 49);
  mixed.push_back(std::move(extra.front()));
  CHECK_THROWS_AS(solve_dps(prior, mixed, cfg), std::invalid_argument);
}
