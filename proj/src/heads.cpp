#include "genlie/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "genlie/rng.hpp"

namespace genlie {

namespace {
constexpr double kProbClamp = 1e-12;
}

HeadParams init_heads(std::size_t embed_dim, std::size_t speaker_classes, std::mt19937_64& rng) {
    HeadParams p;
    p.cls_w = Vec(embed_dim, 0.0);
    const double cls_bound = std::sqrt(6.0 / static_cast<double>(embed_dim + 1));
    for (double& v : p.cls_w) v = uniform_in(rng, -cls_bound, cls_bound);
    p.cls_b = 0.0;
    p.spk_w = Mat(speaker_classes, embed_dim);
    const double spk_bound = std::sqrt(6.0 / static_cast<double>(speaker_classes + embed_dim));
    for (double& v : p.spk_w.data) v = uniform_in(rng, -spk_bound, spk_bound);
    p.spk_b = Vec(speaker_classes, 0.0);
    return p;
}

HeadGrads zero_head_grads(const HeadParams& p) {
    HeadGrads g;
    g.cls_w = Vec(p.cls_w.size(), 0.0);
    g.cls_b = 0.0;
    g.spk_w = Mat(p.spk_w.rows, p.spk_w.cols);
    g.spk_b = Vec(p.spk_b.size(), 0.0);
    return g;
}

ClsResult cls_forward_backward(const std::vector<Vec>& z_batch, const std::vector<int>& labels,
                               const HeadParams& params, HeadGrads& grads) {
    if (z_batch.empty()) throw std::invalid_argument("cls_forward_backward: empty batch");
    if (z_batch.size() != labels.size())
        throw std::invalid_argument("cls_forward_backward: batch/label size mismatch");

    const double inv_batch = 1.0 / static_cast<double>(z_batch.size());
    ClsResult result;
    result.probabilities.reserve(z_batch.size());
    result.dz.reserve(z_batch.size());
    for (std::size_t i = 0; i < z_batch.size(); ++i) {
        const int y = labels[i];
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0/1");
        const double logit = dot(params.cls_w, z_batch[i]) + params.cls_b;
        const double p = 1.0 / (1.0 + std::exp(-logit));
        const double p_safe = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        result.probabilities.push_back(p);
        result.loss += -(y * std::log(p_safe) + (1 - y) * std::log(1.0 - p_safe)) * inv_batch;

        const double dlogit = (p - static_cast<double>(y)) * inv_batch;
        Vec dz(z_batch[i].size(), 0.0);
        axpy(dlogit, params.cls_w, dz);
        result.dz.push_back(std::move(dz));

        axpy(dlogit, z_batch[i], grads.cls_w);
        grads.cls_b += dlogit;
    }
    return result;
}

Vec grl_transform(const Vec& gradient, double lambda) {
    Vec out(gradient.size(), 0.0);
    for (std::size_t i = 0; i < gradient.size(); ++i) out[i] = -lambda * gradient[i];
    return out;
}

SpeakerResult speaker_forward_backward(const std::vector<Vec>& z_batch,
                                       const std::vector<int>& speaker_labels,
                                       const HeadParams& params, double lambda, HeadGrads& grads) {
    if (z_batch.empty()) throw std::invalid_argument("speaker_forward_backward: empty batch");
    if (z_batch.size() != speaker_labels.size())
        throw std::invalid_argument("speaker_forward_backward: batch/label size mismatch");
    const std::size_t n_classes = params.speaker_classes();
    const double inv_batch = 1.0 / static_cast<double>(z_batch.size());

    SpeakerResult result;
    for (std::size_t i = 0; i < z_batch.size(); ++i) {
        const int y = speaker_labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
            throw std::invalid_argument("speaker label " + std::to_string(y) +
                                        " out of range [0, " + std::to_string(n_classes) + ")");
        Vec logits = matvec(params.spk_w, z_batch[i]);
        axpy(1.0, params.spk_b, logits);

        const double max_logit = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        Vec prob(n_classes, 0.0);
        for (std::size_t c = 0; c < n_classes; ++c) {
            prob[c] = std::exp(logits[c] - max_logit);
            sum += prob[c];
        }
        for (double& p : prob) p /= sum;

        result.loss += -std::log(std::max(prob[y], kProbClamp)) * inv_batch;

        Vec dlogits = prob;
        dlogits[y] -= 1.0;
        for (double& v : dlogits) v *= inv_batch;

        // Head gradients learn normally (unreversed).
        add_outer(grads.spk_w, dlogits, z_batch[i]);
        axpy(1.0, dlogits, grads.spk_b);

        Vec dz = matvec_t(params.spk_w, dlogits);
        result.dz_reversed.push_back(grl_transform(dz, lambda));
        result.dz_unreversed.push_back(std::move(dz));
        result.probabilities.push_back(std::move(prob));
    }
    return result;
}

TripletResult triplet_loss(const Vec& z_a, const Vec& z_p, const Vec& z_n, double margin) {
    const std::size_t dim = z_a.size();
    if (z_p.size() != dim || z_n.size() != dim)
        throw std::invalid_argument("triplet_loss: dimension mismatch");
    TripletResult r;
    r.d_anchor.assign(dim, 0.0);
    r.d_positive.assign(dim, 0.0);
    r.d_negative.assign(dim, 0.0);
    const double hinge = squared_distance(z_a, z_p) - squared_distance(z_a, z_n) + margin;
    if (hinge <= 0.0) return r;
    r.value = hinge;
    for (std::size_t i = 0; i < dim; ++i) {
        r.d_anchor[i] = 2.0 * (z_n[i] - z_p[i]);
        r.d_positive[i] = 2.0 * (z_p[i] - z_a[i]);
        r.d_negative[i] = 2.0 * (z_a[i] - z_n[i]);
    }
    return r;
}

std::vector<Triplet> mine_triplets(const std::vector<int>& labels) {
    std::vector<Triplet> out;
    const std::size_t n = labels.size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t p = 0; p < n; ++p) {
            if (a == p || labels[a] != labels[p]) continue;
            for (std::size_t neg = 0; neg < n; ++neg)
                if (labels[neg] != labels[a]) out.push_back({a, p, neg});
        }
    return out;
}

std::pair<double, std::size_t> batch_triplet_loss(const std::vector<Vec>& z_batch,
                                                  const std::vector<Triplet>& triplets,
                                                  double margin, std::vector<Vec>& dz_batch) {
    double loss_sum = 0.0;
    std::size_t active = 0;
    std::vector<TripletResult> results;
    results.reserve(triplets.size());
    for (const auto& t : triplets) {
        results.push_back(triplet_loss(z_batch[t.anchor], z_batch[t.positive],
                                       z_batch[t.negative], margin));
        if (results.back().value > 0.0) {
            loss_sum += results.back().value;
            ++active;
        }
    }
    if (active == 0) return {0.0, 0};
    const double inv = 1.0 / static_cast<double>(active);
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        if (results[i].value <= 0.0) continue;
        axpy(inv, results[i].d_anchor, dz_batch[triplets[i].anchor]);
        axpy(inv, results[i].d_positive, dz_batch[triplets[i].positive]);
        axpy(inv, results[i].d_negative, dz_batch[triplets[i].negative]);
    }
    return {loss_sum * inv, active};
}

LossBreakdown total_loss(double l_cls, double l_id, double l_tri, const LossWeights& weights) {
    if (!std::isfinite(l_cls) || !std::isfinite(l_id) || !std::isfinite(l_tri))
        throw std::invalid_argument("total_loss: non-finite component loss");
    LossBreakdown b;
    b.l_cls = l_cls;
    b.l_id = l_id;
    b.l_tri = l_tri;
    b.l_total = l_cls + weights.alpha * l_id + weights.beta * l_tri;
    return b;
}

}  // namespace genlie
