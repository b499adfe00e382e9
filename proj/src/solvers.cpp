#include "mkv/solvers.hpp"

#include <chrono>
#include <cmath>

namespace mkv {

using ad::Expr;
using ad::Tape;

namespace {

// Substream labels; every random draw in a run derives from
// (seed, label, iteration, step), so runs reproduce regardless of how the
// work is ordered.
namespace labels {
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kStep = 2;
constexpr std::uint64_t kSweep = 3;
constexpr std::uint64_t kEval = 4;
constexpr std::uint64_t kBufferInit = 5;
constexpr std::uint64_t kNetY = 6;
constexpr std::uint64_t kNetZ = 7;
constexpr std::uint64_t kNetPsi = 8;
constexpr std::uint64_t kNetLocal = 9;
constexpr std::uint64_t kLocalForward = 10;
constexpr std::uint64_t kLocalInner = 11;
}  // namespace labels

constexpr int kEvalChunk = 20000;

std::vector<int> layer_plan(int input, int hidden, int layers, int output) {
    std::vector<int> sizes;
    sizes.push_back(input);
    for (int l = 0; l < layers; ++l) sizes.push_back(hidden);
    sizes.push_back(output);
    return sizes;
}

RunStatus finished_status(const std::vector<Real>& losses) {
    if (losses.size() < 2) return RunStatus::MaxIter;
    const std::size_t window = std::max<std::size_t>(1, losses.size() / 10);
    Real head = 0, tail = 0;
    for (std::size_t i = 0; i < window; ++i) {
        head += losses[i];
        tail += losses[losses.size() - 1 - i];
    }
    return tail <= head ? RunStatus::Converged : RunStatus::MaxIter;
}

}  // namespace

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Direct: return "direct";
        case Scheme::Dynamic: return "dynamic";
        case Scheme::Expectation: return "expectation";
        case Scheme::Local: return "local";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "direct") return Scheme::Direct;
    if (name == "dynamic") return Scheme::Dynamic;
    if (name == "expectation") return Scheme::Expectation;
    if (name == "local") return Scheme::Local;
    throw ConfigError("unknown scheme '" + name + "'");
}

const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::MaxIter: return "max-iter";
        case RunStatus::Diverged: return "diverged";
    }
    return "?";
}

void SolverConfig::validate() const {
    if (batch <= 0) throw ConfigError("solver: batch size must be positive");
    if (iterations < 0) throw ConfigError("solver: iteration count must be nonnegative");
    if (learning_rate <= 0) throw ConfigError("solver: learning rate must be positive");
    if (penalty < 0) throw ConfigError("solver: penalty weight must be nonnegative");
    if (hidden_layers <= 0) throw ConfigError("solver: need at least one hidden layer");
    if (eval_batch <= 0) throw ConfigError("solver: evaluation batch must be positive");
    if ((scheme == Scheme::Dynamic || scheme == Scheme::Local) && memory <= 0)
        throw ConfigError("solver: ring-buffer depth M must be positive");
    if (scheme == Scheme::Local) {
        if (law_samples <= 0) throw ConfigError("solver: law sample count R must be positive");
        if (inner_steps <= 0) throw ConfigError("solver: inner step count H must be positive");
    }
}

// -- controls ---------------------------------------------------------------

NetworkControls::NetworkControls(ad::NetworkParams y_net, ad::NetworkParams z_net)
    : y_params(std::move(y_net)), z_params(std::move(z_net)) {}

void NetworkControls::stage(Tape& tape, bool trainable) {
    y_staged = ad::stage_network(tape, y_params, trainable);
    z_staged = ad::stage_network(tape, z_params, trainable);
}

Expr NetworkControls::y0(Tape& tape, Expr x0) { return ad::network_forward(tape, y_staged, x0); }

Expr NetworkControls::z(Tape& tape, int, Real t, Expr x) {
    Expr input = tape.concat_cols(tape.constant(Mat::Constant(x.rows(), 1, t)), x);
    return ad::network_forward(tape, z_staged, input);
}

// -- law providers ------------------------------------------------------------

MeanFieldExprs DirectLaw::at_step(Tape& tape, int i, Real, Expr X, Expr Y, Expr Z) {
    if (i == 0) values_.clear();
    MeanFieldExprs u = batch_moments(tape, model_, X, Y, Z);
    values_.push_back(values_of(u));
    return u;
}

DynamicLaw::DynamicLaw(const ModelDefinition& model, RingBuffer& buffer)
    : model_(model), buffer_(buffer) {}

void DynamicLaw::begin_iteration(Tape&, long m) { iteration_ = m; }

MeanFieldExprs DynamicLaw::at_step(Tape& tape, int i, Real, Expr X, Expr Y, Expr Z) {
    if (i == 0) mixed_.clear();
    const MeanFieldVector u = values_of(batch_moments(tape, model_, X, Y, Z));
    MeanFieldVector mixed = dynamic_update(buffer_, i, u, iteration_);
    mixed_.push_back(mixed);
    return constants_of(tape, mixed);
}

MeanFieldExprs ExactLaw::at_step(Tape& tape, int, Real t, Expr, Expr, Expr) {
    return constants_of(tape, fn_(t));
}

// -- forward sweep ------------------------------------------------------------

SweepResult forward_sweep(const ModelDefinition& model, const TimeGrid& grid, Controls& controls,
                          LawProvider& law, int B, RngStream iteration_rng, Tape& tape,
                          bool taped) {
    const Real dt = grid.dt();
    SweepResult out;

    if (!taped) tape.clear();
    controls.stage(tape, taped);

    RngStream init_rng = iteration_rng.sub(labels::kInit);
    Expr X = tape.constant(sample_initial(model.initial_law, B, model.d, init_rng));
    Expr Y = controls.y0(tape, X);
    out.y_initial = Y.val();

    for (int i = 0; i < grid.steps; ++i) {
        try {
            Expr Z = controls.z(tape, i, grid.t(i), X);
            MeanFieldExprs u = law.at_step(tape, i, grid.t(i), X, Y, Z);
            const Mat delta = iteration_rng.sub(labels::kStep, i).normal(B, model.d);
            CoefCtx ctx{tape, grid.t(i), X, Y, Z, u, B};
            Expr Xn = euler_forward_step(model, ctx, delta, dt);
            Expr Yn = euler_backward_step(model, ctx, delta, dt);
            require_finite(Xn, "forward state");
            require_finite(Yn, "backward state");
            X = Xn;
            Y = Yn;
        } catch (DivergenceError& e) {
            throw DivergenceError(e.what(), e.iteration, i);
        }
        if (!taped) {
            Mat xv = X.val(), yv = Y.val();
            tape.clear();
            controls.stage(tape, false);
            X = tape.constant(std::move(xv));
            Y = tape.constant(std::move(yv));
        }
    }

    Expr loss;
    try {
        Expr uXN;
        if (model.phi1_width > 0) uXN = ad::batch_mean(model.phi1(tape, X));
        Expr G = model.terminal(tape, grid.horizon, X, uXN, B);
        loss = ad::batch_mean(ad::squared_norm_rows(Y - G));
    } catch (DivergenceError& e) {
        throw DivergenceError(e.what(), e.iteration, grid.steps);
    }

    out.loss = taped ? loss : Expr{};
    out.loss_value = loss.val()(0, 0);
    out.x_terminal = X.val();
    out.y_terminal = Y.val();
    if (!std::isfinite(out.loss_value))
        throw DivergenceError("non-finite terminal loss", -1, grid.steps);
    return out;
}

// -- evaluation ---------------------------------------------------------------

EvalSummary evaluate_controls(const ModelDefinition& model, const TimeGrid& grid,
                              Controls& controls, int total_samples, RngStream rng,
                              LawProvider* law) {
    EvalSummary s;
    s.ex_terminal = Vec::Zero(model.d);
    s.y_initial = Vec::Zero(model.k);
    Tape tape;
    DirectLaw fallback(model);
    LawProvider& provider = law ? *law : fallback;
    long done = 0;
    int chunk = 0;
    while (done < total_samples) {
        const int B = static_cast<int>(std::min<long>(kEvalChunk, total_samples - done));
        SweepResult sweep = forward_sweep(model, grid, controls, provider, B,
                                          rng.sub(labels::kEval, chunk), tape, false);
        s.ex_terminal += static_cast<Real>(B) * sweep.x_terminal.colwise().mean().transpose();
        s.y_initial += static_cast<Real>(B) * sweep.y_initial.colwise().mean().transpose();
        s.terminal_loss += static_cast<Real>(B) * sweep.loss_value;
        done += B;
        ++chunk;
    }
    s.ex_terminal /= static_cast<Real>(done);
    s.y_initial /= static_cast<Real>(done);
    s.terminal_loss /= static_cast<Real>(done);
    return s;
}

void finalize_statistics(RunReport& report, const EvalSummary& eval, int d) {
    report.expectation_xT = eval.ex_terminal;
    report.exT_mean = eval.ex_terminal.mean();
    report.exT_sd =
        d > 1 ? std::sqrt((eval.ex_terminal.array() - report.exT_mean).square().sum() / (d - 1))
              : 0.0;
    report.y0 = eval.y_initial;
    report.y0_mean = eval.y_initial.mean();
    report.eval_loss = eval.terminal_loss;
}

// -- global schemes -------------------------------------------------------------

namespace {

/// Law provider for the expectation scheme: the dynamics read Ψ(t_i) while
/// the taped batch moments are kept for the penalty term.
class PsiLaw : public LawProvider {
public:
    PsiLaw(const ModelDefinition& model, ad::NetworkParams& psi) : model_(model), psi_(psi) {}

    void begin_iteration(Tape& tape, long) override {
        staged_ = ad::stage_network(tape, psi_, true);
        moments_.clear();
        values_.clear();
    }

    MeanFieldExprs at_step(Tape& tape, int, Real t, Expr X, Expr Y, Expr Z) override {
        moments_.push_back(batch_moments(tape, model_, X, Y, Z));
        MeanFieldExprs u = law_network_eval(tape, staged_, t, model_);
        values_.push_back(values_of(u));
        return u;
    }

    const std::vector<MeanFieldExprs>& moments() const { return moments_; }
    const std::vector<MeanFieldVector>* trajectory() const override { return &values_; }
    const ad::StagedNetwork& staged() const { return staged_; }

private:
    const ModelDefinition& model_;
    ad::NetworkParams& psi_;
    ad::StagedNetwork staged_;
    std::vector<MeanFieldExprs> moments_;
    std::vector<MeanFieldVector> values_;
};

RunReport run_global(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const int width = cfg.width_for(model.d);
    RngStream root(cfg.seed);

    NetworkControls controls(
        ad::network_init(layer_plan(model.d, width, cfg.hidden_layers, model.k),
                         root.sub(labels::kNetY).next_u64()),
        ad::network_init(layer_plan(1 + model.d, width, cfg.hidden_layers, model.k * model.d),
                         root.sub(labels::kNetZ).next_u64()));
    ad::AdamState adam_y =
        ad::adam_init(controls.y_params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    ad::AdamState adam_z =
        ad::adam_init(controls.z_params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

    std::unique_ptr<RingBuffer> buffer;
    std::unique_ptr<LawProvider> law;
    PsiLaw* psi_law = nullptr;
    ad::NetworkParams psi;
    ad::AdamState adam_psi;

    switch (cfg.scheme) {
        case Scheme::Direct:
            law = std::make_unique<DirectLaw>(model);
            break;
        case Scheme::Dynamic: {
            buffer = std::make_unique<RingBuffer>(grid.steps + 1, cfg.memory);
            RngStream buf_rng = root.sub(labels::kBufferInit);
            buffer->fill(buffer_init_value(model, cfg.law_samples, buf_rng));
            law = std::make_unique<DynamicLaw>(model, *buffer);
            break;
        }
        case Scheme::Expectation: {
            psi = ad::network_init(
                layer_plan(1, width, cfg.hidden_layers, law_output_width(model)),
                root.sub(labels::kNetPsi).next_u64());
            adam_psi = ad::adam_init(psi, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
            auto p = std::make_unique<PsiLaw>(model, psi);
            psi_law = p.get();
            law = std::move(p);
            break;
        }
        case Scheme::Local:
            throw UsageError("run_global cannot run the local scheme");
    }

    RunReport report;
    Tape tape;
    const long sweeps = std::max<long>(1, cfg.iterations);  // K = 0 still records one loss
    for (long m = 0; m < sweeps; ++m) {
        tape.clear();
        law->begin_iteration(tape, m);
        try {
            SweepResult sweep = forward_sweep(model, grid, controls, *law, cfg.batch,
                                              root.sub(labels::kSweep, m), tape, true);
            Expr total = sweep.loss;
            if (psi_law)
                total = total + penalty_loss(tape, psi_law->staged(), grid, psi_law->moments(),
                                             cfg.penalty, model);
            report.loss_history.push_back(total.val()(0, 0));
            if (!std::isfinite(report.loss_history.back()))
                throw DivergenceError("non-finite training loss");
            if (cfg.record_law && law->trajectory()) report.law_trajectory = *law->trajectory();
            if (cfg.iterations == 0) break;

            tape.backward(total, /*release_memory=*/true);
            ad::adam_step(controls.y_params, ad::collect_gradients(tape, controls.y_staged),
                          adam_y, cfg.learning_rate);
            ad::adam_step(controls.z_params, ad::collect_gradients(tape, controls.z_staged),
                          adam_z, cfg.learning_rate);
            if (psi_law)
                ad::adam_step(psi, ad::collect_gradients(tape, psi_law->staged()), adam_psi,
                              cfg.learning_rate);
        } catch (DivergenceError& e) {
            report.status = RunStatus::Diverged;
            report.diverged_iteration = m;
            report.diverged_step = e.step;
            break;
        }
    }

    if (report.status != RunStatus::Diverged) {
        report.status =
            cfg.iterations == 0 ? RunStatus::MaxIter : finished_status(report.loss_history);
        try {
            std::unique_ptr<ExactLaw> psi_eval;
            if (cfg.scheme == Scheme::Expectation) {
                // The trained law network is the scheme's answer: evaluation
                // dynamics read Ψ rather than batch moments.
                psi_eval = std::make_unique<ExactLaw>(
                    [&](Real t) { return law_network_eval(psi, t, model); });
            }
            EvalSummary eval = evaluate_controls(model, grid, controls, cfg.eval_batch, root,
                                                 psi_eval.get());
            finalize_statistics(report, eval, model.d);
        } catch (DivergenceError& e) {
            report.status = RunStatus::Diverged;
            report.diverged_step = e.step;
        }
    }

    report.wall_seconds =
        std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace

RunReport solve_direct(const ModelDefinition& model, const TimeGrid& grid,
                       const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.scheme = Scheme::Direct;
    return solve(model, grid, c);
}

RunReport solve_dynamic(const ModelDefinition& model, const TimeGrid& grid,
                        const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.scheme = Scheme::Dynamic;
    return solve(model, grid, c);
}

RunReport solve_expectation(const ModelDefinition& model, const TimeGrid& grid,
                            const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.scheme = Scheme::Expectation;
    return solve(model, grid, c);
}

// -- local scheme ---------------------------------------------------------------

namespace {

Mat resample_states(const Vec& mean, const Vec& variance, int B, RngStream& rng, bool positive) {
    Mat x = rng.normal(B, static_cast<int>(mean.size()));
    x.array().rowwise() *= variance.transpose().array().sqrt();
    x.rowwise() += mean.transpose();
    // Gaussian resampling of a positive-support law would otherwise leave
    // the log domain with small probability.
    if (positive) x = x.cwiseMax(1e-8);
    return x;
}

bool model_needs_positive_states(const ModelDefinition& model) {
    return model.name.rfind("lognormal", 0) == 0;
}

}  // namespace

RunReport solve_local(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SolverConfig c = cfg;
    c.scheme = Scheme::Local;
    c.validate();

    const int N = grid.steps;
    const int d = model.d, k = model.k;
    const Real dt = grid.dt();
    const int width = c.width_for(d);
    const bool positive = model_needs_positive_states(model);
    RngStream root(c.seed);

    std::vector<ad::NetworkParams> y_nets, z_nets;
    std::vector<ad::AdamState> adam_y, adam_z;
    for (int i = 0; i < N; ++i) {
        y_nets.push_back(ad::network_init(layer_plan(d, width, c.hidden_layers, k),
                                          root.sub(labels::kNetLocal, 2 * i).next_u64()));
        z_nets.push_back(ad::network_init(layer_plan(d, width, c.hidden_layers, k * d),
                                          root.sub(labels::kNetLocal, 2 * i + 1).next_u64()));
        adam_y.push_back(ad::adam_init(y_nets.back(), c.adam_beta1, c.adam_beta2, c.adam_epsilon));
        adam_z.push_back(ad::adam_init(z_nets.back(), c.adam_beta1, c.adam_beta2, c.adam_epsilon));
    }

    RingBuffer buffer(N + 1, c.memory);
    {
        RngStream buf_rng = root.sub(labels::kBufferInit);
        buffer.fill(buffer_init_value(model, c.law_samples, buf_rng));
    }
    const MeanFieldVector init_value = buffer.slot(0, 0);

    RunReport report;
    std::vector<Vec> loc(N + 1), var(N + 1);
    std::vector<MeanFieldVector> mixed(N + 1);
    Tape tape;

    for (long m = 0; m < c.iterations; ++m) {
        try {
            // Forward estimation of the state law with the current networks.
            RngStream fwd_rng = root.sub(labels::kLocalForward, m);
            RngStream init_rng = fwd_rng.sub(labels::kInit);
            Mat X = sample_initial(model.initial_law, c.law_samples, d, init_rng);
            for (int i = 0; i <= N; ++i) {
                loc[i] = X.colwise().mean().transpose();
                var[i] = (X.rowwise() - loc[i].transpose())
                             .array()
                             .square()
                             .colwise()
                             .mean()
                             .transpose()
                             .cwiseMax(0.0);
                tape.clear();
                Expr Xc = tape.constant(X);
                MeanFieldVector u;
                Expr Yi, Zi;
                if (i < N) {
                    ad::StagedNetwork sy = ad::stage_network(tape, y_nets[i], false);
                    ad::StagedNetwork sz = ad::stage_network(tape, z_nets[i], false);
                    Yi = ad::network_forward(tape, sy, Xc);
                    Zi = ad::network_forward(tape, sz, Xc);
                    u = values_of(batch_moments(tape, model, Xc, Yi, Zi));
                } else {
                    // no networks at the terminal index; only the X component
                    // is consumed (by g), the others keep the initialization
                    // convention.
                    u = init_value;
                    if (model.phi1_width > 0)
                        u.x = ad::batch_mean(model.phi1(tape, Xc)).val().row(0);
                }
                mixed[i] = dynamic_update(buffer, i, u, m);
                if (i < N) {
                    const Mat delta = fwd_rng.sub(labels::kStep, i).normal(c.law_samples, d);
                    CoefCtx ctx{tape, grid.t(i),       Xc,
                                Yi,   Zi,              constants_of(tape, mixed[i]),
                                c.law_samples};
                    Expr Xn = euler_forward_step(model, ctx, delta, dt);
                    require_finite(Xn, "forward state");
                    X = Xn.val();
                }
            }

            // Backward local regressions, warm-started at θ_{m,i}.
            Real outer_loss = 0;
            for (int i = N - 1; i >= 0; --i) {
                Real last = 0;
                for (int h = 0; h < c.inner_steps; ++h) {
                    tape.clear();
                    RngStream in_rng = root.sub(labels::kLocalInner, m, i).sub(h);
                    RngStream state_rng = in_rng.sub(1);
                    RngStream noise_rng = in_rng.sub(2);
                    Mat x_value = resample_states(loc[i], var[i], c.batch, state_rng, positive);
                    const Mat xi = noise_rng.normal(c.batch, d);

                    Expr x = tape.constant(std::move(x_value));
                    ad::StagedNetwork sy = ad::stage_network(tape, y_nets[i], true);
                    ad::StagedNetwork sz = ad::stage_network(tape, z_nets[i], true);
                    Expr y = ad::network_forward(tape, sy, x);
                    Expr z = ad::network_forward(tape, sz, x);
                    MeanFieldExprs u = constants_of(tape, mixed[i]);
                    CoefCtx ctx{tape, grid.t(i), x, y, z, u, c.batch};
                    Expr x_next = euler_forward_step(model, ctx, xi, dt);
                    require_finite(x_next, "resampled forward state");

                    Expr y_next;
                    if (i == N - 1) {
                        Expr uXN;
                        if (mixed[N].x.size()) uXN = tape.constant(mixed[N].x);
                        y_next = model.terminal(tape, grid.horizon, x_next, uXN, c.batch);
                    } else {
                        ad::StagedNetwork next = ad::stage_network(tape, y_nets[i + 1], false);
                        y_next = ad::network_forward(tape, next, x_next);
                    }

                    Expr residual = dt * model.driver(ctx) + y_next - y -
                                    tape.contract_kd(z, std::sqrt(dt) * xi, k);
                    Expr loss = ad::batch_mean(ad::squared_norm_rows(residual));
                    last = loss.val()(0, 0);
                    if (!std::isfinite(last)) throw DivergenceError("non-finite local loss");

                    tape.backward(loss, /*release_memory=*/true);
                    ad::adam_step(y_nets[i], ad::collect_gradients(tape, sy), adam_y[i],
                                  c.learning_rate);
                    ad::adam_step(z_nets[i], ad::collect_gradients(tape, sz), adam_z[i],
                                  c.learning_rate);
                }
                outer_loss += last;
            }
            report.loss_history.push_back(outer_loss);
            if (c.record_law) report.law_trajectory = mixed;
        } catch (DivergenceError& e) {
            report.status = RunStatus::Diverged;
            report.diverged_iteration = m;
            report.diverged_step = e.step;
            break;
        }
    }

    if (report.status != RunStatus::Diverged) {
        report.status = finished_status(report.loss_history);
        try {
            // Evaluation under the scheme's own forward dynamics: the drift
            // reads the per-step networks, not an Euler-propagated Y.
            EvalSummary s;
            s.ex_terminal = Vec::Zero(d);
            s.y_initial = Vec::Zero(k);
            long done = 0;
            int chunk = 0;
            while (done < c.eval_batch) {
                const int B = static_cast<int>(std::min<long>(kEvalChunk, c.eval_batch - done));
                RngStream ev = root.sub(labels::kEval, chunk);
                RngStream init_rng = ev.sub(labels::kInit);
                Mat X = sample_initial(model.initial_law, B, d, init_rng);
                Mat y0_values;
                for (int i = 0; i < N; ++i) {
                    tape.clear();
                    Expr Xc = tape.constant(X);
                    ad::StagedNetwork sy = ad::stage_network(tape, y_nets[i], false);
                    ad::StagedNetwork sz = ad::stage_network(tape, z_nets[i], false);
                    Expr Yi = ad::network_forward(tape, sy, Xc);
                    Expr Zi = ad::network_forward(tape, sz, Xc);
                    if (i == 0) y0_values = Yi.val();
                    MeanFieldExprs u = batch_moments(tape, model, Xc, Yi, Zi);
                    const Mat delta = ev.sub(labels::kStep, i).normal(B, d);
                    CoefCtx ctx{tape, grid.t(i), Xc, Yi, Zi, u, B};
                    Expr Xn = euler_forward_step(model, ctx, delta, dt);
                    require_finite(Xn, "forward state");
                    X = Xn.val();
                }
                s.ex_terminal += static_cast<Real>(B) * X.colwise().mean().transpose();
                s.y_initial += static_cast<Real>(B) * y0_values.colwise().mean().transpose();
                done += B;
                ++chunk;
            }
            s.ex_terminal /= static_cast<Real>(done);
            s.y_initial /= static_cast<Real>(done);
            finalize_statistics(report, s, d);
        } catch (DivergenceError& e) {
            report.status = RunStatus::Diverged;
            report.diverged_step = e.step;
        }
    }

    report.wall_seconds =
        std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RunReport solve(const ModelDefinition& model, const TimeGrid& grid, const SolverConfig& cfg) {
    cfg.validate();
    if (cfg.scheme == Scheme::Local) return solve_local(model, grid, cfg);
    return run_global(model, grid, cfg);
}

}  // namespace mkv
