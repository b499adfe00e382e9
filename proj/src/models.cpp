#include "mkv/models.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace mkv {

using ad::Expr;
using ad::Tape;

namespace {

Expr const_like(Tape& tape, int rows, int cols, Real value) {
    return tape.constant(Mat::Constant(rows, cols, value));
}

Expr identity_phi(Tape&, Expr v) { return v; }

/// [v | v²] columnwise.
Expr value_and_square_phi(Tape& tape, Expr v) { return tape.concat_cols(v, ad::square(v)); }

void require_positive_states(const Expr& x) {
    if (x.val().minCoeff() <= 0.0)
        throw DivergenceError("forward state left the positive domain of log");
}

}  // namespace

// -- price impact ---------------------------------------------------------

ModelDefinition price_impact_pontryagin(const PriceImpactParams& p) {
    if (!(p.c_alpha > 0) || !(p.sigma > 0))
        throw ConfigError("price impact: c_alpha and sigma must be positive");
    ModelDefinition m;
    m.name = "price-impact-pontryagin";
    m.d = p.d;
    m.k = p.d;
    m.phi2_width = p.d;  // only E[Y] enters the coefficients
    m.phi2 = identity_phi;
    m.initial_law = InitialLaw::constant(Vec::Constant(p.d, p.x0));
    m.parameters = {{"c_alpha", p.c_alpha}, {"c_x", p.c_x},     {"c_g", p.c_g},
                    {"gamma", p.gamma},     {"sigma", p.sigma}, {"x0", p.x0}};

    m.drift = [p](const CoefCtx& c) { return (-1.0 / p.c_alpha) * c.y; };
    m.sigma = [p](Tape& tape, Real, Expr, Expr, int B) {
        return const_like(tape, B, p.d, p.sigma);
    };
    m.driver = [p](const CoefCtx& c) {
        return p.c_x * c.x + (p.gamma / p.c_alpha) * c.tape.bcast_rows(c.u.y, c.batch);
    };
    m.terminal = [p](Tape&, Real, Expr xT, Expr, int) { return p.c_g * xT; };
    return m;
}

ModelDefinition price_impact_weak(const PriceImpactParams& p) {
    if (!(p.c_alpha > 0) || p.sigma == 0.0)
        throw ConfigError("price impact weak: need c_alpha > 0 and sigma != 0");
    ModelDefinition m;
    m.name = "price-impact-weak";
    m.d = p.d;
    m.k = 1;
    m.phi3_width = p.d;  // only E[Z] enters the coefficients
    m.phi3 = identity_phi;
    m.initial_law = InitialLaw::constant(Vec::Constant(p.d, p.x0));
    m.parameters = {{"c_alpha", p.c_alpha}, {"c_x", p.c_x},     {"c_g", p.c_g},
                    {"gamma", p.gamma},     {"sigma", p.sigma}, {"x0", p.x0}};

    const Real inv_sigma = 1.0 / p.sigma;
    m.drift = [p, inv_sigma](const CoefCtx& c) { return (-inv_sigma / p.c_alpha) * c.z; };
    m.sigma = [p](Tape& tape, Real, Expr, Expr, int B) {
        return const_like(tape, B, p.d, p.sigma);
    };
    m.driver = [p, inv_sigma](const CoefCtx& c) {
        Tape& tape = c.tape;
        Expr quad_x = (p.c_x / 2.0) * ad::squared_norm_rows(c.x);
        Expr cross = (p.gamma / p.c_alpha * inv_sigma) *
                     ad::row_sum(c.x * tape.bcast_rows(c.u.z, c.batch));
        Expr quad_z = (inv_sigma * inv_sigma / (2.0 * p.c_alpha)) * ad::squared_norm_rows(c.z);
        return quad_x + cross + quad_z;
    };
    m.terminal = [p](Tape&, Real, Expr xT, Expr, int) {
        return (p.c_g / 2.0) * ad::squared_norm_rows(xT);
    };
    return m;
}

std::pair<Real, Real> price_impact_mean_ode(const PriceImpactParams& p, Real T, Real t) {
    // d/dt (x̄, ȳ) = A (x̄, ȳ) per coordinate, x̄(0) = x0, ȳ(T) = c_g x̄(T);
    // shoot on ȳ(0), which is linear in the boundary residual.
    Eigen::Matrix2d A;
    A << 0.0, -1.0 / p.c_alpha, -p.c_x, -p.gamma / p.c_alpha;
    const Eigen::Matrix2d PhiT = (A * T).exp();
    const Real denom = PhiT(1, 1) - p.c_g * PhiT(0, 1);
    if (std::abs(denom) < 1e-12) throw NumericError("price impact shooting system is singular");
    const Real eta = p.x0 * (p.c_g * PhiT(0, 0) - PhiT(1, 0)) / denom;
    const Eigen::Vector2d v0(p.x0, eta);
    const Eigen::Vector2d vt = (A * t).exp() * v0;
    return {vt(0), vt(1)};
}

Real price_impact_reference(const PriceImpactParams& p, Real T) {
    return price_impact_mean_ode(p, T, T).first;
}

// -- population -----------------------------------------------------------

ModelDefinition population_model(Real rho, Real x0, Real sigma) {
    ModelDefinition m;
    m.name = "population";
    m.d = 1;
    m.k = 1;
    m.phi1_width = 1;
    m.phi1 = identity_phi;
    m.initial_law = InitialLaw::constant(Vec::Constant(1, x0));
    m.parameters = {{"rho", rho}, {"x0", x0}, {"sigma", sigma}};

    m.drift = [rho](const CoefCtx& c) { return (-rho) * c.y; };
    m.sigma = [sigma](Tape& tape, Real, Expr, Expr, int B) {
        return const_like(tape, B, 1, sigma);
    };
    // dY = arctan(E[X]) dt + Z dW, i.e. f = -arctan(uX).
    m.driver = [](const CoefCtx& c) { return c.tape.bcast_scalar(-ad::atan(c.u.x), c.batch, 1); };
    m.terminal = [](Tape&, Real, Expr xT, Expr, int) { return ad::atan(xT); };
    return m;
}

// -- log-normal construction ----------------------------------------------

LognormalMoments lognormal_moments(const LognormalParams& p, Real t) {
    LognormalMoments mo;
    const Real growth = std::exp(p.alpha * t);
    const Real drift_net = p.a - p.sigma * p.sigma / 2.0;
    mo.x_mean = p.xi * std::exp(p.a * t);
    mo.x_sq = p.xi * p.xi * std::exp((2.0 * p.a + p.sigma * p.sigma) * t);
    const Real log_sum = p.d * (std::log(p.xi) + drift_net * t);
    mo.y_mean = growth * log_sum;
    mo.y_sq = growth * growth * (log_sum * log_sum + p.d * p.sigma * p.sigma * t);
    mo.z_mean = p.sigma * growth;
    mo.z_sq = p.sigma * p.sigma * growth * growth;
    return mo;
}

Real phi_source(const LognormalParams& p, Real t, const Vec& x) {
    if (x.size() != p.d) throw ConfigError("phi_source: dimension mismatch");
    if (x.minCoeff() <= 0.0)
        throw DivergenceError("phi_source: state has a nonpositive coordinate");
    const Real growth = std::exp(p.alpha * t);
    return growth * (p.alpha * x.array().log().sum() + p.d * (p.a - p.sigma * p.sigma / 2.0));
}

namespace {

struct LawParts {
    Expr x1, y1, z1;  // first moments (1×d, 1×1, 1×d)
    Expr x2, y2, z2;  // second moments, quadratic model only
};

LawParts split_law(Tape& tape, const MeanFieldExprs& u, int d, bool quadratic) {
    LawParts s;
    if (!quadratic) {
        s.x1 = u.x;
        s.y1 = u.y;
        s.z1 = u.z;
        return s;
    }
    s.x1 = tape.slice_cols(u.x, 0, d);
    s.x2 = tape.slice_cols(u.x, d, d);
    s.y1 = tape.slice_cols(u.y, 0, 1);
    s.y2 = tape.slice_cols(u.y, 1, 1);
    s.z1 = tape.slice_cols(u.z, 0, d);
    s.z2 = tape.slice_cols(u.z, d, d);
    return s;
}

ModelDefinition lognormal_base(const LognormalParams& p, bool quadratic) {
    if (!(p.sigma > 0) || !(p.xi > 0))
        throw ConfigError("lognormal model: sigma and xi must be positive");
    ModelDefinition m;
    m.name = quadratic ? "lognormal-quadratic" : "lognormal-linear";
    m.d = p.d;
    m.k = 1;
    m.phi1_width = quadratic ? 2 * p.d : p.d;
    m.phi2_width = quadratic ? 2 : 1;
    m.phi3_width = quadratic ? 2 * p.d : p.d;
    m.phi1 = m.phi2 = m.phi3 = quadratic ? value_and_square_phi : identity_phi;
    m.initial_law = InitialLaw::constant(Vec::Constant(p.d, p.xi));
    m.parameters = {{"a", p.a},   {"sigma", p.sigma},   {"alpha", p.alpha},
                    {"xi", p.xi}, {"b_coef", p.b_coef}, {"c_coef", p.c_coef}};

    m.sigma = [p](Tape&, Real, Expr x, Expr, int) {
        require_positive_states(x);
        return p.sigma * x;
    };
    m.terminal = [p](Tape&, Real T, Expr xT, Expr, int) {
        require_positive_states(xT);
        return std::exp(p.alpha * T) * ad::row_sum(ad::log(xT));
    };

    // Every coupling is compensated by its value at the explicit solution
    // (Y = e^{αt} Σ log X^i, Z^i = σ e^{αt}, law moments in closed form),
    // so the uncoupled log-normal dynamics still solve the full system.
    m.drift = [p, quadratic](const CoefCtx& c) {
        Tape& tape = c.tape;
        require_positive_states(c.x);
        const LognormalMoments mo = lognormal_moments(p, c.t);
        Expr y_exact = std::exp(p.alpha * c.t) * ad::row_sum(ad::log(c.x));
        LawParts u = split_law(tape, c.u, p.d, quadratic);

        Expr live = tape.bcast_cols(c.y, p.d) + c.z + tape.bcast_rows(u.x1, c.batch) +
                    tape.bcast_scalar(u.y1, c.batch, p.d) + tape.bcast_rows(u.z1, c.batch);
        // exact Z^i and E[Z^i] coincide: both σ e^{αt}
        Expr exact = tape.bcast_cols(y_exact, p.d) +
                     (mo.z_mean + mo.x_mean + mo.y_mean + mo.z_mean);
        Expr out = p.a * c.x + p.b_coef * (live - exact);
        if (quadratic) {
            Expr live2 = ad::square(tape.bcast_cols(c.y, p.d)) + ad::square(c.z) +
                         tape.bcast_rows(u.x2, c.batch) + tape.bcast_scalar(u.y2, c.batch, p.d) +
                         tape.bcast_rows(u.z2, c.batch);
            Expr exact2 = tape.bcast_cols(ad::square(y_exact), p.d) +
                          (mo.z_sq + mo.x_sq + mo.y_sq + mo.z_sq);
            out = out + p.c_coef * (live2 - exact2);
        }
        return out;
    };

    m.driver = [p, quadratic](const CoefCtx& c) {
        Tape& tape = c.tape;
        require_positive_states(c.x);
        const LognormalMoments mo = lognormal_moments(p, c.t);
        const Real growth = std::exp(p.alpha * c.t);
        Expr sum_log = ad::row_sum(ad::log(c.x));
        Expr y_exact = growth * sum_log;
        LawParts u = split_law(tape, c.u, p.d, quadratic);

        Expr phi = (growth * p.alpha) * sum_log +
                   growth * p.d * (p.a - p.sigma * p.sigma / 2.0);
        Expr live = c.y + ad::row_mean(c.z) +
                    tape.bcast_scalar(ad::row_mean(u.x1), c.batch, 1) +
                    tape.bcast_scalar(u.y1, c.batch, 1) +
                    tape.bcast_scalar(ad::row_mean(u.z1), c.batch, 1);
        Expr exact = y_exact + (mo.z_mean + mo.x_mean + mo.y_mean + mo.z_mean);
        Expr out = -phi - p.b_coef * (live - exact);
        if (quadratic) {
            Expr live2 = ad::square(c.y) + ad::row_mean(ad::square(c.z)) +
                         tape.bcast_scalar(ad::row_mean(u.x2), c.batch, 1) +
                         tape.bcast_scalar(u.y2, c.batch, 1) +
                         tape.bcast_scalar(ad::row_mean(u.z2), c.batch, 1);
            Expr exact2 = ad::square(y_exact) + (mo.z_sq + mo.x_sq + mo.y_sq + mo.z_sq);
            out = out - p.c_coef * (live2 - exact2);
        }
        return out;
    };

    return m;
}

}  // namespace

ModelDefinition lognormal_linear(const LognormalParams& p) { return lognormal_base(p, false); }

ModelDefinition lognormal_quadratic(const LognormalParams& p) { return lognormal_base(p, true); }

}  // namespace mkv
