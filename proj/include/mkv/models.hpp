#pragma once

#include <utility>

#include "mkv/engine.hpp"

namespace mkv {

/// Linear-quadratic mean-field game of controls (price impact).
struct PriceImpactParams {
    Real c_alpha = 2.0 / 3.0;
    Real c_x = 2.0;
    Real c_g = 0.3;
    Real gamma = 2.0;
    Real sigma = 0.7;
    Real x0 = 1.0;
    int d = 10;
};

/// Log-normal construction with explicit solution.
struct LognormalParams {
    Real a = 0.1;       // forward drift rate
    Real sigma = 0.4;   // forward volatility
    Real alpha = 0.5;   // growth rate of Y
    Real xi = 1.0;      // initial value, all coordinates
    Real b_coef = 0.1;  // linear coupling strength
    Real c_coef = 0.1;  // quadratic coupling strength
    int d = 10;
};

/// Pontryagin system: dX = -(1/c_α) Y dt + σ dW,
/// dY = -(c_X X + (γ/c_α) E[Y]) dt + Z dW, Y_T = c_g X_T. k = d.
ModelDefinition price_impact_pontryagin(const PriceImpactParams& p);

/// Weak (value-function) system: dX = -(1/c_α) σ⁻¹ Z dt + σ dW, scalar Y
/// with quadratic driver, Y_T = (c_g/2) ‖X_T‖². k = 1.
ModelDefinition price_impact_weak(const PriceImpactParams& p);

/// E[X_T] per coordinate from the 2×2 mean ODE two-point boundary problem,
/// solved by matrix exponential plus shooting on ȳ(0).
Real price_impact_reference(const PriceImpactParams& p, Real T);

/// (x̄(t), ȳ(t)) along the same boundary-value solution with horizon T.
std::pair<Real, Real> price_impact_mean_ode(const PriceImpactParams& p, Real T, Real t);

/// One-dimensional mixed model: dX = -ρ Y dt + σ dW,
/// dY = arctan(E[X]) dt + Z dW, Y_T = arctan(X_T).
ModelDefinition population_model(Real rho, Real x0, Real sigma = 1.0);

/// The closed-form marginals of the uncoupled log-normal system.
struct LognormalMoments {
    Real x_mean;  // E[X^i_t]
    Real x_sq;    // E[(X^i_t)²]
    Real y_mean;  // E[Y_t]
    Real y_sq;    // E[Y_t²]
    Real z_mean;  // E[Z^i_t]
    Real z_sq;    // E[(Z^i_t)²]
};
LognormalMoments lognormal_moments(const LognormalParams& p, Real t);

/// φ(t, x) = e^{αt} (α Σ_i log x^i + Σ_i (a − σ²/2)); the source term the
/// explicit solution satisfies. Throws DivergenceError when some x^i <= 0.
Real phi_source(const LognormalParams& p, Real t, const Vec& x);

/// Fully coupled model, linear in (Y, Z, law); the exact log-normal
/// solution is preserved by compensating every coupling term.
ModelDefinition lognormal_linear(const LognormalParams& p);

/// Same construction with additional quadratic couplings;
/// phi maps carry (value, value²) pairs.
ModelDefinition lognormal_quadratic(const LognormalParams& p);

}  // namespace mkv
