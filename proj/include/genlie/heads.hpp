#pragma once

#include <array>
#include <random>
#include <vector>

#include "genlie/linalg.hpp"

namespace genlie {

struct HeadParams {
    Vec cls_w;     // D_out
    double cls_b = 0.0;
    Mat spk_w;     // C x D_out
    Vec spk_b;     // C

    std::size_t embed_dim() const { return cls_w.size(); }
    std::size_t speaker_classes() const { return spk_w.rows; }
};

struct HeadGrads {
    Vec cls_w;
    double cls_b = 0.0;
    Mat spk_w;
    Vec spk_b;
};

struct LossWeights {
    double alpha = 0.1;   // identity loss weight
    double beta = 0.1;    // triplet loss weight
    double lambda = 1.0;  // GRL strength
    double margin = 0.2;
};

struct LossBreakdown {
    double l_cls = 0.0;
    double l_id = 0.0;
    double l_tri = 0.0;
    double l_total = 0.0;
    std::size_t triplet_count = 0;  // triplets with positive loss
};

struct ClsResult {
    Vec probabilities;          // per sample
    double loss = 0.0;          // batch mean
    std::vector<Vec> dz;        // per sample dL_cls/dz
};

struct SpeakerResult {
    std::vector<Vec> probabilities;  // per sample, length C
    double loss = 0.0;               // batch mean
    std::vector<Vec> dz_reversed;    // per sample, already passed through the GRL
    std::vector<Vec> dz_unreversed;  // per sample, before the GRL
};

struct TripletResult {
    double value = 0.0;
    Vec d_anchor;
    Vec d_positive;
    Vec d_negative;
};

struct Triplet {
    std::size_t anchor;
    std::size_t positive;
    std::size_t negative;
    bool operator==(const Triplet&) const = default;
};

HeadParams init_heads(std::size_t embed_dim, std::size_t speaker_classes, std::mt19937_64& rng);
HeadGrads zero_head_grads(const HeadParams& p);

// Binary cross-entropy on a sigmoid logit; probabilities clamped to
// [1e-12, 1-1e-12] in the loss value.
ClsResult cls_forward_backward(const std::vector<Vec>& z_batch, const std::vector<int>& labels,
                               const HeadParams& params, HeadGrads& grads);

// Identity forward; backward multiplies by -lambda. Applied only on the
// speaker-head branch where it crosses into the shared embedding.
Vec grl_transform(const Vec& gradient, double lambda);

// Softmax speaker classifier. Head gradients are NOT reversed; only the
// gradient returned for the shared embedding passes through the GRL.
SpeakerResult speaker_forward_backward(const std::vector<Vec>& z_batch,
                                       const std::vector<int>& speaker_labels,
                                       const HeadParams& params, double lambda, HeadGrads& grads);

// L = max(0, ||a-p||^2 - ||a-n||^2 + m), with subgradients (zero at L == 0).
TripletResult triplet_loss(const Vec& z_a, const Vec& z_p, const Vec& z_n, double margin);

// Batch-all mining: every ordered (a, p, n) with label(a)==label(p), a!=p,
// label(n)!=label(a).
std::vector<Triplet> mine_triplets(const std::vector<int>& labels);

// Mean loss over positive-loss triplets (0 if none); accumulates per-sample
// dL_tri/dz into dz_batch.
std::pair<double, std::size_t> batch_triplet_loss(const std::vector<Vec>& z_batch,
                                                  const std::vector<Triplet>& triplets,
                                                  double margin, std::vector<Vec>& dz_batch);

LossBreakdown total_loss(double l_cls, double l_id, double l_tri, const LossWeights& weights);

}  // namespace genlie
