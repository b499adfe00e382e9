#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mkv/meanfield.hpp"
#include "mkv/models.hpp"

using namespace mkv;
using namespace mkv::ad;

namespace {

/// Exact-solution tuple of the log-normal construction at a random positive
/// state: Y = e^{αt} Σ log x^i, Z^i = σ e^{αt}, u = closed-form moments.
struct ExactTuple {
    Mat x, y, z;
    MeanFieldVector u;
};

ExactTuple exact_tuple(const LognormalParams& p, Real t, int B, RngStream& rng, bool quadratic) {
    ExactTuple e;
    e.x = rng.uniform(B, p.d, 0.2, 3.0);
    const Real growth = std::exp(p.alpha * t);
    e.y = growth * e.x.array().log().rowwise().sum();
    e.z = Mat::Constant(B, p.d, p.sigma * growth);
    const LognormalMoments mo = lognormal_moments(p, t);
    if (!quadratic) {
        e.u.x = Row::Constant(p.d, mo.x_mean);
        e.u.y = Row::Constant(1, mo.y_mean);
        e.u.z = Row::Constant(p.d, mo.z_mean);
    } else {
        e.u.x = Row(2 * p.d);
        e.u.x << Row::Constant(p.d, mo.x_mean), Row::Constant(p.d, mo.x_sq);
        e.u.y = Row(2);
        e.u.y << mo.y_mean, mo.y_sq;
        e.u.z = Row(2 * p.d);
        e.u.z << Row::Constant(p.d, mo.z_mean), Row::Constant(p.d, mo.z_sq);
    }
    return e;
}

}  // namespace

TEST_CASE("price impact pontryagin: coefficient plug-ins") {
    PriceImpactParams p;
    ModelDefinition m = price_impact_pontryagin(p);
    CHECK(m.k == p.d);
    CHECK(m.phi2_width == p.d);

    Tape tape;
    const int B = 2;
    Expr X = tape.constant(Mat::Ones(B, p.d));
    Expr Y = tape.constant(Mat::Ones(B, p.d));
    MeanFieldExprs u;
    u.y = tape.constant(Row::Zero(p.d));
    CoefCtx ctx{tape, 0.0, X, Y, Expr{}, u, B};

    // f at x = 1, uY = 0, c_X = 2 -> 2 per coordinate
    CHECK(m.driver(ctx).val()(0, 3) == doctest::Approx(2.0));
    // drift at Y = 1, c_α = 2/3 -> -1.5 per coordinate
    CHECK(m.drift(ctx).val()(1, 7) == doctest::Approx(-1.5));
    // g at x_T = 1, c_g = 0.3 -> 0.3 per coordinate
    CHECK(m.terminal(tape, 1.0, X, Expr{}, B).val()(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("price impact weak: coefficient plug-ins") {
    PriceImpactParams p;
    ModelDefinition m = price_impact_weak(p);
    CHECK(m.k == 1);
    CHECK(m.phi3_width == p.d);

    Tape tape;
    const int B = 1;
    // g at x_T = (1,...,1), d = 10 -> 0.15 · 10 = 1.5
    Expr ones = tape.constant(Mat::Ones(B, p.d));
    CHECK(m.terminal(tape, 1.0, ones, Expr{}, B).val()(0, 0) == doctest::Approx(1.5));

    // f at x = 0, z = 0, uZ = 0 -> 0
    MeanFieldExprs u;
    u.z = tape.constant(Row::Zero(p.d));
    CoefCtx zero{tape, 0.0, tape.constant(Mat::Zero(B, p.d)), Expr{},
                 tape.constant(Mat::Zero(B, p.d)), u, B};
    CHECK(m.driver(zero).val()(0, 0) == doctest::Approx(0.0));

    // f at x = e_1, z = 0.7 e_1, uZ = 0 -> 1 + 0.75 = 1.75
    Mat x = Mat::Zero(B, p.d), z = Mat::Zero(B, p.d);
    x(0, 0) = 1.0;
    z(0, 0) = 0.7;
    CoefCtx ctx{tape, 0.0, tape.constant(x), Expr{}, tape.constant(z), u, B};
    CHECK(m.driver(ctx).val()(0, 0) == doctest::Approx(1.75));
}

TEST_CASE("price impact reference ODE oracle") {
    PriceImpactParams p;
    // paper reference row
    CHECK(std::abs(price_impact_reference(p, 0.25) - 0.7709) < 5e-4);
    CHECK(std::abs(price_impact_reference(p, 0.75) - 0.1978) < 5e-4);
    CHECK(std::abs(price_impact_reference(p, 1.0) - 0.0811) < 5e-4);
    CHECK(std::abs(price_impact_reference(p, 1.5) - 0.0125) < 5e-4);

    // decoupled zero-cost case: x̄(T) = x0
    PriceImpactParams free = p;
    free.c_x = 0.0;
    free.gamma = 0.0;
    free.c_g = 0.0;
    CHECK(price_impact_reference(free, 1.0) == doctest::Approx(1.0).epsilon(1e-10));

    // T -> 0 tends to x0
    CHECK(price_impact_reference(p, 1e-8) == doctest::Approx(p.x0).epsilon(1e-6));
}

TEST_CASE("price impact reference against RK4 shooting cross-check") {
    // independent route: fixed-step RK4 on the mean ODE with linear shooting
    PriceImpactParams p;
    auto integrate = [&](Real eta, Real T) {
        Vec v(2);
        v << p.x0, eta;
        const int n = 4000;
        const Real h = T / n;
        Eigen::Matrix2d A;
        A << 0.0, -1.0 / p.c_alpha, -p.c_x, -p.gamma / p.c_alpha;
        for (int s = 0; s < n; ++s) {
            Vec k1 = A * v, k2 = A * (v + h / 2 * k1), k3 = A * (v + h / 2 * k2),
                k4 = A * (v + h * k3);
            v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return v;
    };
    for (Real T : {0.25, 1.0, 1.5}) {
        auto resid = [&](Real eta) {
            Vec v = integrate(eta, T);
            return v(1) - p.c_g * v(0);
        };
        const Real r0 = resid(0.0), r1 = resid(1.0);
        const Real eta = -r0 / (r1 - r0);
        CHECK(std::abs(integrate(eta, T)(0) - price_impact_reference(p, T)) < 1e-6);
    }
}

TEST_CASE("population model") {
    ModelDefinition m = population_model(0.5, 1.0);
    Tape tape;
    const int B = 2;
    MeanFieldExprs u0;
    u0.x = tape.constant(Row::Zero(1));
    CoefCtx c0{tape, 0.0, Expr{}, tape.constant(Mat::Zero(B, 1)), Expr{}, u0, B};
    CHECK(m.driver(c0).val()(0, 0) == doctest::Approx(0.0));  // f at uX = 0

    Expr xT = tape.constant(Mat::Ones(B, 1));
    CHECK(m.terminal(tape, 1.0, xT, Expr{}, B).val()(0, 0) ==
          doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("lognormal closed-form moments") {
    LognormalParams p;

    // t = 0, ξ = 1
    LognormalMoments m0 = lognormal_moments(p, 0.0);
    CHECK(m0.x_mean == doctest::Approx(1.0));
    CHECK(m0.x_sq == doctest::Approx(1.0));
    CHECK(m0.y_mean == doctest::Approx(0.0));
    CHECK(m0.y_sq == doctest::Approx(0.0));
    CHECK(m0.z_mean == doctest::Approx(0.4));
    CHECK(m0.z_sq == doctest::Approx(0.16));

    // paper references: ξ e^{aT}
    CHECK(std::abs(lognormal_moments(p, 0.25).x_mean - 1.0253) < 5e-5);
    CHECK(std::abs(lognormal_moments(p, 0.75).x_mean - 1.0779) < 5e-5);
    CHECK(std::abs(lognormal_moments(p, 1.0).x_mean - 1.1052) < 5e-5);
    CHECK(std::abs(lognormal_moments(p, 1.5).x_mean - 1.1618) < 5e-5);

    // k_1 = e^{0.36}
    CHECK(lognormal_moments(p, 1.0).x_sq == doctest::Approx(std::exp(0.36)).epsilon(1e-12));

    // Monte-Carlo cross-check of all six at t = 0.6
    RngStream rng(13);
    const int n = 400000;
    const Real t = 0.6;
    Mat w = rng.normal(n, p.d);
    Mat xs = (((p.a - p.sigma * p.sigma / 2) * t + p.sigma * std::sqrt(t) * w.array()).exp() *
              p.xi);
    Vec y = std::exp(p.alpha * t) * xs.array().log().rowwise().sum();
    LognormalMoments mo = lognormal_moments(p, t);
    CHECK(xs.col(0).mean() == doctest::Approx(mo.x_mean).epsilon(5e-3));
    CHECK(xs.col(0).array().square().mean() == doctest::Approx(mo.x_sq).epsilon(5e-3));
    CHECK(y.mean() == doctest::Approx(mo.y_mean).epsilon(5e-3));
    CHECK(y.array().square().mean() == doctest::Approx(mo.y_sq).epsilon(5e-3));
}

TEST_CASE("phi source term") {
    LognormalParams p;
    const Vec ones = Vec::Ones(p.d);
    // t = 0, x = 1: Σ (a − σ²/2) = 10 · 0.02 = 0.2
    CHECK(phi_source(p, 0.0, ones) == doctest::Approx(0.2));
    // scaling by e^{αt} when the log term vanishes
    CHECK(phi_source(p, 0.8, ones) == doctest::Approx(std::exp(0.4) * 0.2));
    // α = 0 keeps it constant at x = 1
    LognormalParams p0 = p;
    p0.alpha = 0.0;
    CHECK(phi_source(p0, 3.0, ones) == doctest::Approx(0.2));

    Vec bad = ones;
    bad(3) = -1.0;
    CHECK_THROWS_AS(phi_source(p, 0.0, bad), DivergenceError);
}

TEST_CASE("compensator cancellation at the exact solution") {
    // evaluating b and f at the exact-solution tuple returns the uncoupled
    // values (a x, −φ) to machine precision, for both models
    RngStream rng(2718);
    for (bool quadratic : {false, true}) {
        LognormalParams p;
        ModelDefinition m = quadratic ? lognormal_quadratic(p) : lognormal_linear(p);
        const int B = 1000;
        for (Real t : {0.0, 0.3, 1.2}) {
            ExactTuple e = exact_tuple(p, t, B, rng, quadratic);
            Tape tape;
            CoefCtx ctx{tape,
                        t,
                        tape.constant(e.x),
                        tape.constant(e.y),
                        tape.constant(e.z),
                        constants_of(tape, e.u),
                        B};
            const Mat b = m.drift(ctx).val();
            const Mat f = m.driver(ctx).val();
            const Mat want_b = p.a * e.x;
            CHECK((b - want_b).cwiseAbs().maxCoeff() < 1e-11);
            for (int j = 0; j < B; j += 97) {
                const Real phi = phi_source(p, t, e.x.row(j).transpose());
                CHECK(f(j, 0) == doctest::Approx(-phi).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("lognormal couplings vanish as configured") {
    RngStream rng(5);
    // b_coef = 0: drift reduces to a·x (GBM), driver to −φ
    LognormalParams p;
    p.b_coef = 0.0;
    ModelDefinition m = lognormal_linear(p);
    const int B = 8;
    Mat x = rng.uniform(B, p.d, 0.5, 2.0);
    Tape tape;
    MeanFieldVector arbitrary;
    arbitrary.x = Row::Constant(p.d, 0.33);
    arbitrary.y = Row::Constant(1, -0.7);
    arbitrary.z = Row::Constant(p.d, 1.9);
    CoefCtx ctx{tape,
                0.4,
                tape.constant(x),
                tape.constant(rng.normal(B, 1)),
                tape.constant(rng.normal(B, p.d)),
                constants_of(tape, arbitrary),
                B};
    CHECK((m.drift(ctx).val() - p.a * x).cwiseAbs().maxCoeff() < 1e-12);
    for (int j = 0; j < B; ++j)
        CHECK(m.driver(ctx).val()(j, 0) ==
              doctest::Approx(-phi_source(p, 0.4, x.row(j).transpose())).epsilon(1e-11));

    // c_coef = 0: quadratic model coincides with the linear one on matching inputs
    LognormalParams pq;
    pq.c_coef = 0.0;
    ModelDefinition lin = lognormal_linear(pq);
    ModelDefinition quad = lognormal_quadratic(pq);
    MeanFieldVector u_lin, u_quad;
    u_lin.x = Row::Constant(pq.d, 1.1);
    u_lin.y = Row::Constant(1, 0.2);
    u_lin.z = Row::Constant(pq.d, 0.5);
    u_quad.x = Row(2 * pq.d);
    u_quad.x << u_lin.x, Row::Constant(pq.d, 9.9);
    u_quad.y = Row(2);
    u_quad.y << 0.2, 4.4;
    u_quad.z = Row(2 * pq.d);
    u_quad.z << u_lin.z, Row::Constant(pq.d, 7.7);

    Mat xx = rng.uniform(B, pq.d, 0.5, 2.0);
    Mat yy = rng.normal(B, 1);
    Mat zz = rng.normal(B, pq.d);
    Tape t2;
    CoefCtx lc{t2,  0.7, t2.constant(xx), t2.constant(yy), t2.constant(zz),
               constants_of(t2, u_lin), B};
    CoefCtx qc{t2,  0.7, t2.constant(xx), t2.constant(yy), t2.constant(zz),
               constants_of(t2, u_quad), B};
    CHECK((lin.drift(lc).val() - quad.drift(qc).val()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lin.driver(lc).val() - quad.driver(qc).val()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("model coefficients are differentiable along a taped sweep") {
    // one full forward sweep at tiny N with gradients flowing through the
    // coefficients of the quadratic model (the richest one)
    LognormalParams p;
    p.d = 2;
    ModelDefinition m = lognormal_quadratic(p);
    const int B = 4;

    // analytic gradient of the sweep loss with respect to a bump on X_0
    Tape tape;
    Mat x0v = Mat::Constant(B, p.d, 1.0);
    Expr param = tape.param(Mat::Zero(1, 1));
    Expr X = tape.constant(x0v) + tape.bcast_scalar(param, B, p.d);
    Expr Y = tape.constant(Mat::Constant(B, 1, 0.1));
    Expr Z = tape.constant(Mat::Constant(B, p.d, 0.2));
    Real t = 0.0;
    const Real dt = 0.05;
    for (int i = 0; i < 3; ++i) {
        MeanFieldExprs u = batch_moments(tape, m, X, Y, Z);
        CoefCtx ctx{tape, t, X, Y, Z, u, B};
        const Mat delta = RngStream(123).sub(900 + i).normal(B, p.d);
        Expr Xn = euler_forward_step(m, ctx, delta, dt);
        Expr Yn = euler_backward_step(m, ctx, delta, dt);
        X = Xn;
        Y = Yn;
        t += dt;
    }
    Expr uXN = batch_mean(m.phi1(tape, X));
    Expr G = m.terminal(tape, 0.15, X, uXN, B);
    Expr loss = batch_mean(squared_norm_rows(Y - G));
    tape.backward(loss);
    const Real analytic = tape.grad(param.id)(0, 0);

    auto value_at = [&](Real bump) {
        Tape t2;
        Expr X2 = t2.constant(Mat::Constant(B, p.d, 1.0 + bump));
        Expr Y2 = t2.constant(Mat::Constant(B, 1, 0.1));
        Expr Z2 = t2.constant(Mat::Constant(B, p.d, 0.2));
        Real tt = 0.0;
        for (int i = 0; i < 3; ++i) {
            MeanFieldExprs u = batch_moments(t2, m, X2, Y2, Z2);
            CoefCtx ctx{t2, tt, X2, Y2, Z2, u, B};
            const Mat delta = RngStream(123).sub(900 + i).normal(B, p.d);
            Expr Xn = euler_forward_step(m, ctx, delta, 0.05);
            Expr Yn = euler_backward_step(m, ctx, delta, 0.05);
            X2 = Xn;
            Y2 = Yn;
            tt += 0.05;
        }
        Expr uXN2 = batch_mean(m.phi1(t2, X2));
        Expr G2 = m.terminal(t2, 0.15, X2, uXN2, B);
        return batch_mean(squared_norm_rows(Y2 - G2)).val()(0, 0);
    };
    const Real h = 1e-6;
    const Real numeric = (value_at(h) - value_at(-h)) / (2 * h);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5));
}
