#pragma once

#include <functional>
#include <map>
#include <string>

#include "mkv/common.hpp"
#include "mkv/rng.hpp"
#include "mkv/tape.hpp"

namespace mkv {

/// Uniform grid t_i = i T / N, i = 0..N.
struct TimeGrid {
    Real horizon;
    int steps;

    TimeGrid(Real T, int N) : horizon(T), steps(N) {
        if (!(T > 0)) throw ConfigError("time grid: horizon must be positive");
        if (N <= 0) throw ConfigError("time grid: step count must be positive");
    }
    Real dt() const { return horizon / steps; }
    Real t(int i) const { return horizon * i / steps; }
};

struct InitialLaw {
    enum class Kind { Constant, Gaussian };
    Kind kind = Kind::Constant;
    Vec mean;      // Constant: the point mass
    Vec variance;  // Gaussian: diagonal covariance

    static InitialLaw constant(Vec x0) { return {Kind::Constant, std::move(x0), Vec()}; }
    static InitialLaw gaussian(Vec mean, Vec variance) {
        return {Kind::Gaussian, std::move(mean), std::move(variance)};
    }
};

/// B i.i.d. draws from the initial law, one sample per row.
Mat sample_initial(const InitialLaw& law, int B, int d, RngStream& rng);

/// The three mean-field components at one time: uX = E[phi1(X)],
/// uY = E[phi2(Y)], uZ = E[phi3(Z)]. A width-0 row marks an unused
/// component.
struct MeanFieldVector {
    Row x, y, z;
};

/// Tape-level counterpart; an invalid Expr marks an unused component.
struct MeanFieldExprs {
    ad::Expr x, y, z;
};

/// Coefficient-evaluation context handed to the model callbacks. x, y, z are
/// batched tape nodes (B×d, B×k, B×(k·d)); u holds the current mean-field
/// estimate as tape nodes (constant or differentiable depending on solver).
struct CoefCtx {
    ad::Tape& tape;
    Real t;
    ad::Expr x;
    ad::Expr y;
    ad::Expr z;
    MeanFieldExprs u;
    int batch;
};

/// One MKV FBSDE: dX = b dt + sigma ⊙ dW, dY = -f dt + Z dW,
/// Y_T = g(X_T, uX_T), with first-order interaction through
/// (E[phi1(X)], E[phi2(Y)], E[phi3(Z)]).
struct ModelDefinition {
    std::string name;
    int d = 1;  // forward dimension
    int k = 1;  // backward dimension
    int phi1_width = 0, phi2_width = 0, phi3_width = 0;
    InitialLaw initial_law;

    std::function<ad::Expr(const CoefCtx&)> drift;   // -> B×d
    std::function<ad::Expr(const CoefCtx&)> driver;  // -> B×k
    /// Diagonal diffusion coefficient, elementwise against the Brownian
    /// increment: -> B×d.
    std::function<ad::Expr(ad::Tape&, Real t, ad::Expr x, ad::Expr uX, int B)> sigma;
    /// g(X_T, uX_T), evaluated at the horizon -> B×k.
    std::function<ad::Expr(ad::Tape&, Real T, ad::Expr xT, ad::Expr uX, int B)> terminal;

    std::function<ad::Expr(ad::Tape&, ad::Expr)> phi1, phi2, phi3;

    std::map<std::string, Real> parameters;  // echoed into reports
};

/// X_{i+1} = X_i + b Δt + sigma ⊙ (√Δt δ). delta is B×d of standard normals.
ad::Expr euler_forward_step(const ModelDefinition& model, const CoefCtx& ctx, const Mat& delta,
                            Real dt);

/// Y_{i+1} = Y_i - f Δt + √Δt (Z δ), with the per-sample k×d contraction.
ad::Expr euler_backward_step(const ModelDefinition& model, const CoefCtx& ctx, const Mat& delta,
                             Real dt);

/// Throws DivergenceError (step index attached by the caller) if the value
/// holds a NaN or infinity.
void require_finite(const ad::Expr& e, const char* what);

}  // namespace mkv
