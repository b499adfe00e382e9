#include "mkv/network.hpp"

#include <cmath>

#include "mkv/rng.hpp"

namespace mkv::ad {

bool NetworkParams::all_finite() const {
    for (const Mat& w : weights)
        if (!w.allFinite()) return false;
    for (const Mat& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

NetworkParams network_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ConfigError("network_init: need at least [input, output]");
    for (int s : layer_sizes)
        if (s <= 0) throw ConfigError("network_init: layer sizes must be positive");

    NetworkParams p;
    p.layer_sizes = layer_sizes;
    RngStream rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const Real limit = std::sqrt(6.0 / (fan_in + fan_out));
        RngStream layer = rng.sub(l);
        p.weights.push_back(layer.uniform(fan_out, fan_in, -limit, limit));
        p.biases.push_back(Mat::Zero(1, fan_out));
    }
    return p;
}

Vec network_forward(const NetworkParams& params, const Vec& input) {
    if (input.size() != params.input_width())
        throw ConfigError("network_forward: input width mismatch");
    Vec h = input;
    const std::size_t L = params.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Vec a = params.weights[l] * h + params.biases[l].transpose();
        h = (l + 1 < L) ? a.array().tanh().matrix() : a;
    }
    return h;
}

StagedNetwork stage_network(Tape& tape, const NetworkParams& params, bool trainable) {
    StagedNetwork s;
    s.epoch = tape.epoch();
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        s.weights.push_back(trainable ? tape.param(params.weights[l])
                                      : tape.constant(params.weights[l]));
        s.biases.push_back(trainable ? tape.param(params.biases[l])
                                     : tape.constant(params.biases[l]));
    }
    return s;
}

Expr network_forward(Tape& tape, const StagedNetwork& net, Expr input) {
    if (input.cols() != net.weights.front().cols())
        throw ConfigError("network_forward: input width mismatch");
    Expr h = input;
    const std::size_t L = net.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Expr a = tape.affine(h, net.weights[l], net.biases[l]);
        h = (l + 1 < L) ? tanh(a) : a;
    }
    return h;
}

NetworkGrads collect_gradients(const Tape& tape, const StagedNetwork& net) {
    NetworkGrads g;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights.push_back(tape.grad_or_zero(net.weights[l].id));
        g.biases.push_back(tape.grad_or_zero(net.biases[l].id));
    }
    return g;
}

AdamState adam_init(const NetworkParams& params, Real beta1, Real beta2, Real epsilon) {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        s.m_weights.push_back(Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
        s.v_weights.push_back(Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
        s.m_biases.push_back(Mat::Zero(1, params.biases[l].cols()));
        s.v_biases.push_back(Mat::Zero(1, params.biases[l].cols()));
    }
    return s;
}

namespace {

void adam_apply(Mat& p, const Mat& g, Mat& m, Mat& v, const AdamState& s, Real lr, long step) {
    if (!g.allFinite())
        throw DivergenceError("non-finite gradient at optimizer step " + std::to_string(step));
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    const Real bc1 = 1.0 - std::pow(s.beta1, static_cast<Real>(step));
    const Real bc2 = 1.0 - std::pow(s.beta2, static_cast<Real>(step));
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.epsilon);
}

}  // namespace

void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state, Real lr) {
    if (lr <= 0) throw ConfigError("adam_step: learning rate must be positive");
    const long step = ++state.step;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam_apply(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l],
                   state, lr, step);
        adam_apply(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l], state,
                   lr, step);
    }
}

}  // namespace mkv::ad
