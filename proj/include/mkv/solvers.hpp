#pragma once

#include <memory>
#include <vector>

#include "mkv/meanfield.hpp"
#include "mkv/models.hpp"

namespace mkv {

enum class Scheme { Direct, Dynamic, Expectation, Local };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct SolverConfig {
    Scheme scheme = Scheme::Dynamic;
    int batch = 200;           // B
    long iterations = 2000;    // K (outer iterations for the local scheme)
    int memory = 100;          // M, ring-buffer depth
    int law_samples = 50000;   // R, forward law-estimation sample count
    int inner_steps = 1;       // H, gradient steps per local problem
    Real penalty = 10.0;       // λ (expectation scheme)
    Real learning_rate = 1e-3;
    std::uint64_t seed = 0;
    int hidden_layers = 3;
    int hidden_width = 0;  // 0 -> d + 10
    Real adam_beta1 = 0.9, adam_beta2 = 0.999, adam_epsilon = 1e-8;
    int eval_batch = 100000;  // terminal-statistics sample count
    bool record_law = false;  // keep the per-step ũ trajectory in the report

    void validate() const;
    int width_for(int d) const { return hidden_width > 0 ? hidden_width : d + 10; }
};

enum class RunStatus { Converged, MaxIter, Diverged };

const char* status_name(RunStatus s);

struct RunReport {
    std::vector<Real> loss_history;
    Vec expectation_xT;  // per-coordinate E[X_T]
    Real exT_mean = 0;
    Real exT_sd = 0;  // spread across the d coordinates
    Vec y0;           // per-coordinate Y_0
    Real y0_mean = 0;
    Real eval_loss = 0;  // terminal loss of the evaluation sweep
    Real wall_seconds = 0;
    RunStatus status = RunStatus::MaxIter;
    long diverged_iteration = -1;
    int diverged_step = -1;
    std::vector<MeanFieldVector> law_trajectory;  // ũ_i when recorded
};

/// Feedback controls: Y_0 = y0(X_0) and Z_i = z(i, t_i, X_i). Networks in
/// the solvers, closed forms in the test oracles.
class Controls {
public:
    virtual ~Controls() = default;
    virtual void stage(ad::Tape& tape, bool trainable) = 0;
    virtual ad::Expr y0(ad::Tape& tape, ad::Expr x0) = 0;
    virtual ad::Expr z(ad::Tape& tape, int i, Real t, ad::Expr x) = 0;
};

/// Supplies the mean-field vector entering the dynamics at each step:
/// in-batch differentiable moments (direct), frozen ring-buffer mixtures
/// (dynamic), a law network (expectation), or closed-form values (tests).
class LawProvider {
public:
    virtual ~LawProvider() = default;
    virtual void begin_iteration(ad::Tape&, long) {}
    virtual MeanFieldExprs at_step(ad::Tape& tape, int i, Real t, ad::Expr X, ad::Expr Y,
                                   ad::Expr Z) = 0;
    /// Per-step law values of the last sweep, when the provider records them.
    virtual const std::vector<MeanFieldVector>* trajectory() const { return nullptr; }
};

struct SweepResult {
    ad::Expr loss;  // valid only for taped sweeps
    Real loss_value = 0;
    Mat x_terminal;
    Mat y_terminal;
    Mat y_initial;
};

/// One Euler sweep of the coupled system with terminal loss
/// (1/B) Σ_j ‖Y_N − g(X_N, X̄_N)‖². When `taped`, the whole sweep is
/// recorded for the reverse pass; otherwise values are detached step by
/// step so evaluation runs in O(per-step) memory. Throws DivergenceError
/// with the offending step attached.
SweepResult forward_sweep(const ModelDefinition& model, const TimeGrid& grid, Controls& controls,
                          LawProvider& law, int B, RngStream iteration_rng, ad::Tape& tape,
                          bool taped);

RunReport solve_direct(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg);
RunReport solve_dynamic(const ModelDefinition& model, const TimeGrid& grid,
                        const SolverConfig& cfg);
RunReport solve_expectation(const ModelDefinition& model, const TimeGrid& grid,
                            const SolverConfig& cfg);
RunReport solve_local(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg);

/// Dispatch on cfg.scheme.
RunReport solve(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg);

// -- building blocks shared with the tests --------------------------------

class NetworkControls : public Controls {
public:
    NetworkControls(ad::NetworkParams y_net, ad::NetworkParams z_net);
    void stage(ad::Tape& tape, bool trainable) override;
    ad::Expr y0(ad::Tape& tape, ad::Expr x0) override;
    ad::Expr z(ad::Tape& tape, int i, Real t, ad::Expr x) override;

    ad::NetworkParams y_params, z_params;
    ad::StagedNetwork y_staged, z_staged;
};

class DirectLaw : public LawProvider {
public:
    explicit DirectLaw(const ModelDefinition& model) : model_(model) {}
    MeanFieldExprs at_step(ad::Tape& tape, int i, Real t, ad::Expr X, ad::Expr Y,
                           ad::Expr Z) override;
    const std::vector<MeanFieldVector>* trajectory() const override { return &values_; }

private:
    const ModelDefinition& model_;
    std::vector<MeanFieldVector> values_;
};

class DynamicLaw : public LawProvider {
public:
    DynamicLaw(const ModelDefinition& model, RingBuffer& buffer);
    void begin_iteration(ad::Tape&, long m) override;
    MeanFieldExprs at_step(ad::Tape& tape, int i, Real t, ad::Expr X, ad::Expr Y,
                           ad::Expr Z) override;
    const std::vector<MeanFieldVector>* trajectory() const override { return &mixed_; }

private:
    const ModelDefinition& model_;
    RingBuffer& buffer_;
    long iteration_ = 0;
    std::vector<MeanFieldVector> mixed_;
};

/// Closed-form law for tests, oracle-substitution runs, and the evaluation
/// of the expectation scheme (where the trained Ψ plays the closed form).
class ExactLaw : public LawProvider {
public:
    using MomentFn = std::function<MeanFieldVector(Real t)>;
    explicit ExactLaw(MomentFn fn) : fn_(std::move(fn)) {}
    MeanFieldExprs at_step(ad::Tape& tape, int, Real t, ad::Expr, ad::Expr, ad::Expr) override;

private:
    MomentFn fn_;
};

/// Untaped chunked evaluation of trained controls: E[X_T], Y_0 and the
/// terminal loss over `total_samples` fresh paths. The law defaults to each
/// chunk's own empirical moments; pass `law` to override.
struct EvalSummary {
    Vec ex_terminal;
    Vec y_initial;
    Real terminal_loss = 0;
};
EvalSummary evaluate_controls(const ModelDefinition& model, const TimeGrid& grid,
                              Controls& controls, int total_samples, RngStream rng,
                              LawProvider* law = nullptr);

void finalize_statistics(RunReport& report, const EvalSummary& eval, int d);

}  // namespace mkv
