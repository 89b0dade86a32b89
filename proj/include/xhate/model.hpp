#pragma once

// The trainable classification head on top of frozen features:
// linear -> ReLU -> (optional second linear + ReLU) -> dropout -> linear
// -> softmax, with analytic gradients of the class-weighted cross-entropy.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xhate/corpus.hpp"
#include "xhate/util.hpp"

namespace xhate {

enum class Mode { TRAIN, EVAL };

struct HeadSpec {
    int d_model = 32;
    int d_hidden = 512;
    double dropout_p = 0.1;
    bool extra_dense = false;  // second (linear, ReLU) pair before the output layer
    bool use_dropout = true;
    static constexpr int n_classes = 2;

    void validate() const;
};

struct HeadParams {
    // Row-major: w1 is [d_hidden x d_model], w1b is [d_hidden x d_hidden]
    // (only when extra_dense), w2 is [2 x d_hidden].
    std::vector<double> w1, b1;
    std::vector<double> w1b, b1b;
    std::vector<double> w2, b2;

    std::size_t count() const {
        return w1.size() + b1.size() + w1b.size() + b1b.size() + w2.size() + b2.size();
    }
};

// Same shapes as HeadParams.
using HeadGrads = HeadParams;

HeadGrads zero_grads_like(const HeadParams& params);

// Applies fn to every parameter scalar, paired with its gradient, in a fixed
// order. The flat index is stable and shared with OptimizerState.
template <typename Fn>
void for_each_param(HeadParams& params, const HeadGrads& grads, Fn&& fn) {
    std::size_t flat = 0;
    auto walk = [&](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) fn(p[i], g[i], flat++);
    };
    walk(params.w1, grads.w1);
    walk(params.b1, grads.b1);
    walk(params.w1b, grads.w1b);
    walk(params.b1b, grads.b1b);
    walk(params.w2, grads.w2);
    walk(params.b2, grads.b2);
}

// Glorot-uniform weights, zero biases, deterministic per seed.
HeadParams init_head(const HeadSpec& spec, std::uint64_t seed);

struct Forward {
    std::array<double, 2> logits{};
    std::array<double, 2> probs{};
    // caches for backprop
    std::vector<double> z1, h1;            // first linear pre/post ReLU
    std::vector<double> z1b, h1b;          // extra dense pre/post ReLU
    std::vector<double> h_dropped;         // input to the output layer
    std::vector<std::uint8_t> mask_used;   // dropout mask applied (TRAIN only)
};

// In TRAIN mode with dropout enabled the mask must be supplied (one entry per
// hidden unit of the layer feeding the output) or an Rng provided to draw it.
Forward head_forward(std::span<const float> x, const HeadParams& params,
                     const HeadSpec& spec, Mode mode,
                     const std::vector<std::uint8_t>* dropout_mask = nullptr,
                     Rng* rng = nullptr);

struct Prediction {
    std::array<double, 2> probs{};
    int label = 0;  // exact ties resolve to 0
};

Prediction predict(std::span<const float> x, const HeadParams& params, const HeadSpec& spec);

// Weighted mean of per-sample cross-entropy: sum_i w[y_i] * (-log p_i[y_i])
// divided by sum_i w[y_i]. Log is clamped at 1e-12.
double weighted_cross_entropy(const std::vector<std::array<double, 2>>& probs,
                              const std::vector<int>& gold, const ClassWeights& weights);

struct BatchGradients {
    HeadGrads grads;
    double loss = 0.0;
    double weight_sum = 0.0;  // sum of per-sample class weights in the batch
};

// Analytic gradients of weighted_cross_entropy over a batch of feature rows.
// rows[i] points at a d_model-wide feature vector. In TRAIN mode, masks must
// hold one mask per sample (may be empty when dropout is disabled) or an Rng
// must be supplied.
BatchGradients head_gradients(const std::vector<const float*>& rows,
                              const std::vector<int>& gold, const HeadParams& params,
                              const HeadSpec& spec, const ClassWeights& weights,
                              Mode mode,
                              const std::vector<std::vector<std::uint8_t>>* masks = nullptr,
                              Rng* rng = nullptr);

// --- persistence: portable head parameter file --------------------------------
// JSON with the spec fields and flat arrays; doubles are serialized in their
// shortest decimal form that round-trips exactly.

std::string head_params_to_json(const HeadParams& params, const HeadSpec& spec);
std::pair<HeadParams, HeadSpec> head_params_from_json(const std::string& text);
std::uint64_t head_params_digest(const HeadParams& params, const HeadSpec& spec);

}  // namespace xhate
