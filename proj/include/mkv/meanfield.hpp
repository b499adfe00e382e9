#pragma once

#include <vector>

#include "mkv/engine.hpp"
#include "mkv/network.hpp"

namespace mkv {

/// Memory of the last M batch-moment estimates per time step, indexed
/// (i, r) for i = 0..N and r = 0..M-1. Writes at iterations m and m+M land
/// in the same slot (the m % M rule).
class RingBuffer {
public:
    RingBuffer(int num_steps, int depth);

    void fill(const MeanFieldVector& v);
    /// Mean over the M stored entries at step i.
    MeanFieldVector mean(int i) const;
    void write(int i, long iteration, const MeanFieldVector& u);
    const MeanFieldVector& slot(int i, int r) const;

    int steps() const { return steps_; }
    int depth() const { return depth_; }

private:
    int steps_, depth_;
    std::vector<MeanFieldVector> slots_;  // row-major (i, r)
};

/// Convex update ũ_i = (M ν_i + u_i) / (M + 1), then ζ_{i, m % M} <- u_i.
/// The returned value is a frozen statistic: callers feed it back into the
/// dynamics as a constant, never as a differentiable node.
MeanFieldVector dynamic_update(RingBuffer& buffer, int i, const MeanFieldVector& u, long iteration);

/// Empirical means of (phi1(X), phi2(Y), phi3(Z)) over the batch, recorded
/// on the tape (differentiable through the samples). Components with
/// width 0 come back invalid.
MeanFieldExprs batch_moments(ad::Tape& tape, const ModelDefinition& model, ad::Expr X, ad::Expr Y,
                             ad::Expr Z);

/// Detached values of the above.
MeanFieldVector values_of(const MeanFieldExprs& u);

/// Constant tape nodes carrying a frozen mean-field vector.
MeanFieldExprs constants_of(ad::Tape& tape, const MeanFieldVector& u);

/// Total width |uX| + |uY| + |uZ| of the law network output for a model.
int law_output_width(const ModelDefinition& model);

/// Evaluate the law network Ψ at time t and split its output row into the
/// (X, Y, Z) components in that order.
MeanFieldExprs law_network_eval(ad::Tape& tape, const ad::StagedNetwork& psi, Real t,
                                const ModelDefinition& model);
MeanFieldVector law_network_eval(const ad::NetworkParams& psi, Real t,
                                 const ModelDefinition& model);

/// (λ/N) Σ_{i=0}^{N-1} ‖Ψ(t_i) − moment_i‖²; differentiable with respect
/// to both the network and the recorded moments.
ad::Expr penalty_loss(ad::Tape& tape, const ad::StagedNetwork& psi, const TimeGrid& grid,
                      const std::vector<MeanFieldExprs>& moments, Real lambda,
                      const ModelDefinition& model);

/// Ring-buffer initialization value ζ = (E[phi1(ξ)], phi2(0), phi3(0)).
/// For a constant initial law the expectation is exact; for a Gaussian law
/// it is a one-time Monte-Carlo estimate with `samples` draws.
MeanFieldVector buffer_init_value(const ModelDefinition& model, int samples, RngStream& rng);

}  // namespace mkv
