#include "mkv/meanfield.hpp"

namespace mkv {

namespace {

Row combine(const Row& nu, const Row& u, int M) {
    if (nu.size() == 0) return nu;
    return (static_cast<Real>(M) * nu + u) / static_cast<Real>(M + 1);
}

}  // namespace

RingBuffer::RingBuffer(int num_steps, int depth) : steps_(num_steps), depth_(depth) {
    if (num_steps <= 0 || depth <= 0) throw ConfigError("ring buffer: invalid shape");
    slots_.resize(static_cast<std::size_t>(num_steps) * depth);
}

void RingBuffer::fill(const MeanFieldVector& v) {
    for (auto& s : slots_) s = v;
}

const MeanFieldVector& RingBuffer::slot(int i, int r) const {
    return slots_[static_cast<std::size_t>(i) * depth_ + r];
}

MeanFieldVector RingBuffer::mean(int i) const {
    MeanFieldVector acc = slot(i, 0);
    for (int r = 1; r < depth_; ++r) {
        const MeanFieldVector& s = slot(i, r);
        if (acc.x.size()) acc.x += s.x;
        if (acc.y.size()) acc.y += s.y;
        if (acc.z.size()) acc.z += s.z;
    }
    const Real inv = 1.0 / depth_;
    acc.x *= inv;
    acc.y *= inv;
    acc.z *= inv;
    return acc;
}

void RingBuffer::write(int i, long iteration, const MeanFieldVector& u) {
    slots_[static_cast<std::size_t>(i) * depth_ + static_cast<int>(iteration % depth_)] = u;
}

MeanFieldVector dynamic_update(RingBuffer& buffer, int i, const MeanFieldVector& u,
                               long iteration) {
    const MeanFieldVector nu = buffer.mean(i);
    MeanFieldVector mixed;
    mixed.x = combine(nu.x, u.x, buffer.depth());
    mixed.y = combine(nu.y, u.y, buffer.depth());
    mixed.z = combine(nu.z, u.z, buffer.depth());
    buffer.write(i, iteration, u);
    return mixed;
}

MeanFieldExprs batch_moments(ad::Tape& tape, const ModelDefinition& model, ad::Expr X, ad::Expr Y,
                             ad::Expr Z) {
    MeanFieldExprs u;
    if (model.phi1_width > 0) u.x = ad::batch_mean(model.phi1(tape, X));
    if (model.phi2_width > 0) u.y = ad::batch_mean(model.phi2(tape, Y));
    if (model.phi3_width > 0) u.z = ad::batch_mean(model.phi3(tape, Z));
    return u;
}

MeanFieldVector values_of(const MeanFieldExprs& u) {
    MeanFieldVector v;
    if (u.x.valid()) v.x = u.x.val().row(0);
    if (u.y.valid()) v.y = u.y.val().row(0);
    if (u.z.valid()) v.z = u.z.val().row(0);
    return v;
}

MeanFieldExprs constants_of(ad::Tape& tape, const MeanFieldVector& u) {
    MeanFieldExprs e;
    if (u.x.size()) e.x = tape.constant(u.x);
    if (u.y.size()) e.y = tape.constant(u.y);
    if (u.z.size()) e.z = tape.constant(u.z);
    return e;
}

int law_output_width(const ModelDefinition& model) {
    return model.phi1_width + model.phi2_width + model.phi3_width;
}

MeanFieldExprs law_network_eval(ad::Tape& tape, const ad::StagedNetwork& psi, Real t,
                                const ModelDefinition& model) {
    if (psi.weights.front().cols() != 1)
        throw ConfigError("law network: input width must be 1 (time)");
    if (psi.weights.back().rows() != law_output_width(model))
        throw ConfigError("law network: output width must be |uX|+|uY|+|uZ|");
    ad::Expr out = ad::network_forward(tape, psi, tape.constant(Mat::Constant(1, 1, t)));
    MeanFieldExprs u;
    int at = 0;
    if (model.phi1_width > 0) u.x = tape.slice_cols(out, at, model.phi1_width);
    at += model.phi1_width;
    if (model.phi2_width > 0) u.y = tape.slice_cols(out, at, model.phi2_width);
    at += model.phi2_width;
    if (model.phi3_width > 0) u.z = tape.slice_cols(out, at, model.phi3_width);
    return u;
}

MeanFieldVector law_network_eval(const ad::NetworkParams& psi, Real t,
                                 const ModelDefinition& model) {
    ad::Tape scratch;
    ad::StagedNetwork staged = ad::stage_network(scratch, psi, false);
    return values_of(law_network_eval(scratch, staged, t, model));
}

namespace {

ad::Expr gap_sq(ad::Expr psi_part, ad::Expr moment) {
    return ad::squared_norm_rows(psi_part - moment);
}

}  // namespace

ad::Expr penalty_loss(ad::Tape& tape, const ad::StagedNetwork& psi, const TimeGrid& grid,
                      const std::vector<MeanFieldExprs>& moments, Real lambda,
                      const ModelDefinition& model) {
    if (lambda < 0) throw ConfigError("penalty_loss: lambda must be nonnegative");
    ad::Expr total;
    for (int i = 0; i < static_cast<int>(moments.size()); ++i) {
        MeanFieldExprs p = law_network_eval(tape, psi, grid.t(i), model);
        ad::Expr term;
        if (moments[i].x.valid()) term = gap_sq(p.x, moments[i].x);
        if (moments[i].y.valid()) {
            ad::Expr t2 = gap_sq(p.y, moments[i].y);
            term = term.valid() ? term + t2 : t2;
        }
        if (moments[i].z.valid()) {
            ad::Expr t2 = gap_sq(p.z, moments[i].z);
            term = term.valid() ? term + t2 : t2;
        }
        if (term.valid()) total = total.valid() ? total + term : term;
    }
    if (!total.valid()) return tape.constant(Mat::Zero(1, 1));
    return (lambda / grid.steps) * total;
}

MeanFieldVector buffer_init_value(const ModelDefinition& model, int samples, RngStream& rng) {
    ad::Tape scratch;
    MeanFieldVector v;
    if (model.phi1_width > 0) {
        Mat X;
        if (model.initial_law.kind == InitialLaw::Kind::Constant) {
            X = model.initial_law.mean.transpose();
        } else {
            if (samples <= 0) throw ConfigError("buffer init: need positive sample count");
            X = sample_initial(model.initial_law, samples, model.d, rng);
        }
        v.x = ad::batch_mean(model.phi1(scratch, scratch.constant(X))).val().row(0);
    }
    if (model.phi2_width > 0)
        v.y = model.phi2(scratch, scratch.constant(Mat::Zero(1, model.k))).val().row(0);
    if (model.phi3_width > 0)
        v.z = model.phi3(scratch, scratch.constant(Mat::Zero(1, model.k * model.d))).val().row(0);
    return v;
}

}  // namespace mkv
