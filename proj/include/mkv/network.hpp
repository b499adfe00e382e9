#pragma once

#include <cstdint>
#include <vector>

#include "mkv/common.hpp"
#include "mkv/tape.hpp"

namespace mkv::ad {

/// Dense feedforward network: tanh hidden layers, identity output.
/// weights[l] has shape layer_sizes[l+1] × layer_sizes[l]; biases[l] is a
/// 1 × layer_sizes[l+1] row.
struct NetworkParams {
    std::vector<int> layer_sizes;
    std::vector<Mat> weights;
    std::vector<Mat> biases;

    int input_width() const { return layer_sizes.front(); }
    int output_width() const { return layer_sizes.back(); }
    bool all_finite() const;
};

/// Gradient (or any other quantity) shaped like a NetworkParams.
struct NetworkGrads {
    std::vector<Mat> weights;
    std::vector<Mat> biases;
};

/// Glorot-uniform weights on ±sqrt(6/(fan_in+fan_out)), zero biases.
/// Deterministic in the seed.
NetworkParams network_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Plain (untaped) evaluation of a single input vector.
Vec network_forward(const NetworkParams& params, const Vec& input);

/// Network parameters registered on a tape for one epoch.
struct StagedNetwork {
    std::vector<Expr> weights, biases;
    long epoch = -1;
};

StagedNetwork stage_network(Tape& tape, const NetworkParams& params, bool trainable);

/// Batched evaluation: input is B × layer_sizes[0], output B × layer_sizes[last].
Expr network_forward(Tape& tape, const StagedNetwork& net, Expr input);

NetworkGrads collect_gradients(const Tape& tape, const StagedNetwork& net);

// -- Adam ---------------------------------------------------------------

struct AdamState {
    long step = 0;
    Real beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    std::vector<Mat> m_weights, v_weights;
    std::vector<Mat> m_biases, v_biases;
};

AdamState adam_init(const NetworkParams& params, Real beta1 = 0.9, Real beta2 = 0.999,
                    Real epsilon = 1e-8);

/// One bias-corrected Adam update, in place. Throws DivergenceError on a
/// non-finite gradient, naming the step at which it happened.
void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state, Real lr);

}  // namespace mkv::ad
