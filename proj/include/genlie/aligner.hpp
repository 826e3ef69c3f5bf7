#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "genlie/linalg.hpp"

namespace genlie {

enum class PassMode { Train, Eval };

// Two-layer re-embedding MLP: z = W2 * relu(W1 * pooled + b1) + b2, with
// inverted dropout after the ReLU in train mode.
struct AlignerParams {
    Mat w1;  // H x D
    Vec b1;  // H
    Mat w2;  // D_out x H
    Vec b2;  // D_out
    double dropout_rate = 0.3;

    std::size_t in_dim() const { return w1.cols; }
    std::size_t hidden_dim() const { return w1.rows; }
    std::size_t out_dim() const { return w2.rows; }
};

struct AlignerGrads {
    Mat w1;
    Vec b1;
    Mat w2;
    Vec b2;
};

struct AlignerCache {
    Vec pooled;          // input
    Vec pre_activation;  // a = W1 x + b1
    Vec hidden;          // after ReLU and (train mode) dropout scaling
    Vec dropout_mask;    // 1/(1-p) kept, 0 dropped; all-ones in eval mode
    PassMode mode = PassMode::Eval;
};

AlignerParams init_aligner(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                           double dropout_rate, std::mt19937_64& rng);
AlignerGrads zero_aligner_grads(const AlignerParams& p);

// Column-wise mean of the segment feature rows.
Vec mean_pool(const std::vector<Vec>& segment_features);

Vec reembed_forward(const Vec& pooled, const AlignerParams& params, PassMode mode,
                    std::mt19937_64& dropout_rng, AlignerCache& cache);

// Accumulates parameter gradients into `grads`; returns dL/d_pooled.
Vec reembed_backward(const AlignerCache& cache, const Vec& dz, const AlignerParams& params,
                     AlignerGrads& grads);

}  // namespace genlie
