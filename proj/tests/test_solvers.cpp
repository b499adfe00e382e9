#include <doctest.h>

#include <cmath>

#include "mkv/solvers.hpp"
#include "oracles.hpp"

using namespace mkv;
using namespace mkv::ad;
using mkv::testing::CallableControls;

namespace {

SolverConfig tiny_config(Scheme scheme, std::uint64_t seed = 7) {
    SolverConfig cfg;
    cfg.scheme = scheme;
    cfg.batch = 64;
    cfg.iterations = 30;
    cfg.memory = 10;
    cfg.law_samples = 512;
    cfg.eval_batch = 4096;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("forward sweep: zero model and zero controls give zero loss") {
    ModelDefinition m;
    m.d = m.k = 1;
    m.initial_law = InitialLaw::constant(Vec::Zero(1));
    m.drift = [](const CoefCtx& c) { return c.tape.constant(Mat::Zero(c.batch, 1)); };
    m.sigma = [](Tape& t, Real, Expr, Expr, int B) { return t.constant(Mat::Zero(B, 1)); };
    m.driver = [](const CoefCtx& c) { return c.tape.constant(Mat::Zero(c.batch, 1)); };
    m.terminal = [](Tape&, Real, Expr xT, Expr, int) { return 0.0 * xT; };

    CallableControls controls;
    controls.y0_fn = [](Tape&, Expr x) { return 0.0 * x; };
    controls.z_fn = [](Tape&, int, Real, Expr x) { return 0.0 * x; };

    TimeGrid grid(1.0, 4);
    DirectLaw law(m);
    Tape tape;
    SweepResult r = forward_sweep(m, grid, controls, law, 16, RngStream(3), tape, true);
    CHECK(r.loss_value == 0.0);
}

TEST_CASE("forward sweep: N = 1 hand expansion of the two Euler steps") {
    // decoupled model (no law, no coupling): the loss equals the standard
    // deep-BSDE loss, cross-checked by hand at N = 1
    const Real s = 0.8, f0 = 0.65, T = 0.04;
    ModelDefinition m = testing::decoupled_quadratic_model(s, f0);
    TimeGrid grid(T, 1);

    const Real ay = 0.3, by = -0.2, cz = 1.4;
    CallableControls controls;
    controls.y0_fn = [=](Tape& t, Expr x) { return t.scalar_affine(x, ay, by); };
    controls.z_fn = [=](Tape& t, int, Real, Expr x) {
        return t.constant(Mat::Constant(x.rows(), 1, cz));
    };

    DirectLaw law(m);
    Tape tape;
    const int B = 256;
    SweepResult r = forward_sweep(m, grid, controls, law, B, RngStream(11), tape, true);

    // recover the Gaussian increments from the forward states
    const Mat x0 = Mat::Ones(B, 1);
    const Mat delta = (r.x_terminal - x0) / (s * std::sqrt(T));
    Real loss = 0;
    for (int j = 0; j < B; ++j) {
        const Real y0 = ay * x0(j, 0) + by;
        const Real y1 = y0 - f0 * T + cz * std::sqrt(T) * delta(j, 0);
        CHECK(r.y_terminal(j, 0) == doctest::Approx(y1).epsilon(1e-12));
        const Real g = r.x_terminal(j, 0) * r.x_terminal(j, 0);
        loss += (y1 - g) * (y1 - g);
    }
    CHECK(r.loss_value == doctest::Approx(loss / B).epsilon(1e-12));
}

TEST_CASE("forward sweep at the price-impact analytic solution has tiny loss") {
    PriceImpactParams pi;
    TimeGrid grid(0.25, 25);
    ModelDefinition m = price_impact_pontryagin(pi);
    testing::PriceImpactAnalytic exact(pi, grid);
    CallableControls controls = exact.controls(pi);

    DirectLaw law(m);
    Tape tape;
    SweepResult r = forward_sweep(m, grid, controls, law, 10000, RngStream(5), tape, false);
    CHECK(r.loss_value < 1e-3);

    // Y_0 of the affine solution equals the shooting value of ȳ(0)
    const auto [x0bar, y0bar] = price_impact_mean_ode(pi, grid.horizon, 0.0);
    CHECK(r.y_initial(0, 0) == doctest::Approx(y0bar).epsilon(1e-9));
    CHECK(x0bar == doctest::Approx(pi.x0));
}

TEST_CASE("euler floor: exact log-normal controls bound trained losses from below") {
    LognormalParams lp;
    ModelDefinition m = lognormal_linear(lp);
    CallableControls controls = testing::lognormal_exact_controls(lp);

    // floor at N = 100 with the closed-form law
    {
        TimeGrid grid(0.25, 100);
        ExactLaw law = testing::lognormal_exact_law(lp, false);
        Tape tape;
        SweepResult r = forward_sweep(m, grid, controls, law, 20000, RngStream(19), tape, false);
        CHECK(r.loss_value > 0.0);
        CHECK(r.loss_value < 5e-3);
    }

    // a desk-scale trained run cannot beat the same-grid floor
    TimeGrid grid(0.25, 25);
    ExactLaw law = testing::lognormal_exact_law(lp, false);
    Tape tape;
    SweepResult floor_sweep =
        forward_sweep(m, grid, controls, law, 20000, RngStream(19), tape, false);
    SolverConfig cfg = tiny_config(Scheme::Dynamic);
    cfg.iterations = 150;
    RunReport run = solve(m, grid, cfg);
    REQUIRE(run.status != RunStatus::Diverged);
    CHECK(run.loss_history.back() >= 0.5 * floor_sweep.loss_value);
}

TEST_CASE("expectation with exact-law substitution matches direct-style loss") {
    // λ = 0 and the law frozen at the closed-form moments reduces the sweep
    // to a direct-style loss with exact law
    LognormalParams lp;
    ModelDefinition m = lognormal_linear(lp);
    TimeGrid grid(0.25, 10);
    CallableControls controls = testing::lognormal_exact_controls(lp);

    ExactLaw oracle_law = testing::lognormal_exact_law(lp, false);
    DirectLaw direct_law(m);
    Tape tape;
    const Real with_oracle =
        forward_sweep(m, grid, controls, oracle_law, 20000, RngStream(3), tape, false).loss_value;
    const Real with_batch =
        forward_sweep(m, grid, controls, direct_law, 20000, RngStream(3), tape, false).loss_value;
    CHECK(with_oracle == doctest::Approx(with_batch).epsilon(0.25));
}

TEST_CASE("degenerate reduction: direct and dynamic coincide without law terms") {
    ModelDefinition m = testing::decoupled_quadratic_model(0.5, 0.1);
    TimeGrid grid(0.1, 5);
    RunReport direct = solve_direct(m, grid, tiny_config(Scheme::Direct));
    RunReport dynamic = solve_dynamic(m, grid, tiny_config(Scheme::Dynamic));

    REQUIRE(direct.loss_history.size() == dynamic.loss_history.size());
    for (std::size_t i = 0; i < direct.loss_history.size(); ++i)
        CHECK(direct.loss_history[i] == dynamic.loss_history[i]);
    CHECK(direct.exT_mean == dynamic.exT_mean);
    CHECK(direct.y0_mean == dynamic.y0_mean);
}

TEST_CASE("bit-identical reruns under a fixed seed") {
    PriceImpactParams pi;
    pi.d = 3;
    ModelDefinition m = price_impact_pontryagin(pi);
    TimeGrid grid(0.1, 4);
    SolverConfig cfg = tiny_config(Scheme::Dynamic, 99);
    RunReport a = solve(m, grid, cfg);
    RunReport b = solve(m, grid, cfg);
    REQUIRE(a.loss_history.size() == b.loss_history.size());
    for (std::size_t i = 0; i < a.loss_history.size(); ++i)
        CHECK(a.loss_history[i] == b.loss_history[i]);
    CHECK((a.expectation_xT.array() == b.expectation_xT.array()).all());
    CHECK(a.y0_mean == b.y0_mean);
    CHECK(a.status == b.status);
}

TEST_CASE("K = 0 records one loss and changes nothing") {
    ModelDefinition m = testing::decoupled_quadratic_model(0.5, 0.0);
    TimeGrid grid(0.1, 3);
    SolverConfig cfg = tiny_config(Scheme::Direct);
    cfg.iterations = 0;
    RunReport r = solve(m, grid, cfg);
    CHECK(r.loss_history.size() == 1);
    CHECK(r.status == RunStatus::MaxIter);
    // the recorded loss is that of the untrained networks: rerunning gives
    // the same value, and one training step would change it
    RunReport r2 = solve(m, grid, cfg);
    CHECK(r.loss_history[0] == r2.loss_history[0]);
    cfg.iterations = 1;
    RunReport r3 = solve(m, grid, cfg);
    CHECK(r3.loss_history[0] == r.loss_history[0]);
}

TEST_CASE("losses are nonnegative and finite on a healthy run") {
    ModelDefinition m = population_model(0.5, 1.0);
    TimeGrid grid(1.0, 10);
    SolverConfig cfg = tiny_config(Scheme::Dynamic);
    cfg.iterations = 40;
    RunReport r = solve(m, grid, cfg);
    REQUIRE(r.status != RunStatus::Diverged);
    for (Real l : r.loss_history) {
        CHECK(l >= 0.0);
        CHECK(std::isfinite(l));
    }
    CHECK(r.law_trajectory.empty());  // record_law off by default
    cfg.record_law = true;
    cfg.iterations = 3;
    RunReport rl = solve(m, grid, cfg);
    CHECK(rl.law_trajectory.size() == static_cast<std::size_t>(grid.steps));
}

TEST_CASE("local solver: one-step conditional expectation regression") {
    // N = 1, g(x) = x², b = 0, σ = 1: 𝒴⁰ regresses onto
    // E[g(x + √Δt Ξ) | x] = x² + Δt, cross-checked by Monte Carlo
    ModelDefinition m = testing::decoupled_quadratic_model(1.0, 0.0);
    m.initial_law = InitialLaw::gaussian(Vec::Zero(1), Vec::Ones(1));
    const Real T = 0.01;
    TimeGrid grid(T, 1);

    SolverConfig cfg;
    cfg.scheme = Scheme::Local;
    cfg.batch = 256;
    cfg.iterations = 1;
    cfg.inner_steps = 2500;
    cfg.memory = 5;
    cfg.law_samples = 4096;
    cfg.eval_batch = 1024;
    cfg.learning_rate = 3e-3;
    cfg.seed = 17;
    RunReport run = solve(m, grid, cfg);
    REQUIRE(run.status != RunStatus::Diverged);

    // probe the trained 𝒴⁰ via a fresh local run? the report only carries
    // Y_0 statistics; instead compare the mean of 𝒴⁰ over the initial law
    // against the Monte-Carlo value of E[E[g(x₁)|x₀]] = E[x₀²] + Δt.
    RngStream probe(4242);
    const Mat x0 = probe.normal(200000, 1);
    const Mat xi = probe.normal(200000, 1);
    Real mc = 0;
    for (int j = 0; j < x0.rows(); ++j) {
        const Real x1 = x0(j, 0) + std::sqrt(T) * xi(j, 0);
        mc += x1 * x1;
    }
    mc /= static_cast<Real>(x0.rows());
    CHECK(run.y0_mean == doctest::Approx(mc).epsilon(0.05));
}

TEST_CASE("local solver: degenerate constant initial condition") {
    // Constant law and zero diffusion: V_0 = 0, the resampled inputs
    // degenerate to x0 and 𝒴⁰ learns g(x0) exactly
    ModelDefinition m = testing::decoupled_quadratic_model(0.0, 0.0);
    TimeGrid grid(0.01, 1);
    SolverConfig cfg;
    cfg.scheme = Scheme::Local;
    cfg.batch = 32;
    cfg.iterations = 1;
    cfg.inner_steps = 1500;
    cfg.memory = 3;
    cfg.law_samples = 64;
    cfg.eval_batch = 64;
    cfg.learning_rate = 5e-3;
    cfg.seed = 3;
    RunReport run = solve(m, grid, cfg);
    REQUIRE(run.status != RunStatus::Diverged);
    CHECK(run.y0_mean == doctest::Approx(1.0).epsilon(0.02));  // g(1) = 1
}

TEST_CASE("expectation scheme trains the law network jointly") {
    // smoke: loss decreases and the law network tracks E[X_t] = x0 on the
    // population model (X is nearly driftless for small rho)
    ModelDefinition m = population_model(0.05, 1.0);
    TimeGrid grid(0.5, 8);
    SolverConfig cfg = tiny_config(Scheme::Expectation);
    cfg.batch = 128;
    cfg.iterations = 400;
    cfg.penalty = 10.0;
    RunReport r = solve(m, grid, cfg);
    REQUIRE(r.status != RunStatus::Diverged);
    CHECK(r.loss_history.back() < 0.5 * r.loss_history.front());
    // Ψ-driven evaluation produced sane statistics
    CHECK(std::abs(r.exT_mean - 1.0) < 0.25);
}

TEST_CASE("divergence is recorded, not crashed") {
    // a model whose drift explodes produces a diverged report with the
    // failing iteration and step attached
    ModelDefinition m = testing::decoupled_quadratic_model(0.5, 0.0);
    m.drift = [](const CoefCtx& c) {
        return c.tape.constant(Mat::Constant(c.batch, 1, 1e200));
    };
    TimeGrid grid(0.1, 4);
    SolverConfig cfg = tiny_config(Scheme::Direct);
    RunReport r = solve(m, grid, cfg);
    CHECK(r.status == RunStatus::Diverged);
    CHECK(r.diverged_iteration == 0);
    CHECK(r.diverged_step >= 0);
}

TEST_CASE("solver config validation") {
    SolverConfig cfg;
    cfg.batch = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SolverConfig{};
    cfg.penalty = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SolverConfig{};
    cfg.scheme = Scheme::Local;
    cfg.inner_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(scheme_from_name("direct") == Scheme::Direct);
    CHECK_THROWS_AS(scheme_from_name("magic"), ConfigError);
}
