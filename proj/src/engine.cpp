#include "mkv/engine.hpp"

#include <cmath>

namespace mkv {

Mat sample_initial(const InitialLaw& law, int B, int d, RngStream& rng) {
    if (B <= 0) throw ConfigError("sample_initial: batch size must be positive");
    if (law.mean.size() != d) throw ConfigError("sample_initial: law dimension mismatch");
    if (law.kind == InitialLaw::Kind::Constant) return law.mean.transpose().replicate(B, 1);
    Mat draws = rng.normal(B, d);
    draws.array().rowwise() *= law.variance.transpose().array().sqrt();
    draws.rowwise() += law.mean.transpose();
    return draws;
}

ad::Expr euler_forward_step(const ModelDefinition& model, const CoefCtx& ctx, const Mat& delta,
                            Real dt) {
    ad::Tape& tape = ctx.tape;
    ad::Expr b = model.drift(ctx);
    ad::Expr s = model.sigma(tape, ctx.t, ctx.x, ctx.u.x, ctx.batch);
    return ctx.x + dt * b + tape.cmul(s, std::sqrt(dt) * delta);
}

ad::Expr euler_backward_step(const ModelDefinition& model, const CoefCtx& ctx, const Mat& delta,
                             Real dt) {
    ad::Tape& tape = ctx.tape;
    ad::Expr f = model.driver(ctx);
    ad::Expr zdw = tape.contract_kd(ctx.z, std::sqrt(dt) * delta, model.k);
    return ctx.y - dt * f + zdw;
}

void require_finite(const ad::Expr& e, const char* what) {
    if (!e.val().allFinite()) throw DivergenceError(std::string("non-finite ") + what);
}

}  // namespace mkv
