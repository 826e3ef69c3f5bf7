#include "genlie/aligner.hpp"

#include <cmath>
#include <stdexcept>

#include "genlie/rng.hpp"

namespace genlie {

namespace {

// Uniform in +-sqrt(6/(fan_in+fan_out)).
void glorot_fill(Mat& m, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (double& v : m.data) v = uniform_in(rng, -bound, bound);
}

}  // namespace

AlignerParams init_aligner(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                           double dropout_rate, std::mt19937_64& rng) {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("dropout_rate must be in [0, 1)");
    AlignerParams p;
    p.w1 = Mat(hidden_dim, in_dim);
    p.b1 = Vec(hidden_dim, 0.0);
    p.w2 = Mat(out_dim, hidden_dim);
    p.b2 = Vec(out_dim, 0.0);
    p.dropout_rate = dropout_rate;
    glorot_fill(p.w1, rng);
    glorot_fill(p.w2, rng);
    return p;
}

AlignerGrads zero_aligner_grads(const AlignerParams& p) {
    AlignerGrads g;
    g.w1 = Mat(p.w1.rows, p.w1.cols);
    g.b1 = Vec(p.b1.size(), 0.0);
    g.w2 = Mat(p.w2.rows, p.w2.cols);
    g.b2 = Vec(p.b2.size(), 0.0);
    return g;
}

Vec mean_pool(const std::vector<Vec>& segment_features) {
    if (segment_features.empty()) throw std::invalid_argument("mean_pool: no segment features");
    Vec out(segment_features.front().size(), 0.0);
    for (const Vec& row : segment_features) axpy(1.0, row, out);
    for (double& v : out) v /= static_cast<double>(segment_features.size());
    return out;
}

Vec reembed_forward(const Vec& pooled, const AlignerParams& params, PassMode mode,
                    std::mt19937_64& dropout_rng, AlignerCache& cache) {
    if (pooled.size() != params.in_dim())
        throw std::invalid_argument("reembed_forward: pooled vector has wrong dimension");

    cache.pooled = pooled;
    cache.mode = mode;
    cache.pre_activation = matvec(params.w1, pooled);
    axpy(1.0, params.b1, cache.pre_activation);

    const std::size_t h = params.hidden_dim();
    cache.hidden.assign(h, 0.0);
    cache.dropout_mask.assign(h, 1.0);
    const double p = params.dropout_rate;
    for (std::size_t i = 0; i < h; ++i) {
        double r = std::max(cache.pre_activation[i], 0.0);
        if (mode == PassMode::Train && p > 0.0) {
            const double keep = (uniform01(dropout_rng) >= p) ? 1.0 / (1.0 - p) : 0.0;
            cache.dropout_mask[i] = keep;
            r *= keep;
        }
        cache.hidden[i] = r;
    }

    Vec z = matvec(params.w2, cache.hidden);
    axpy(1.0, params.b2, z);
    return z;
}

Vec reembed_backward(const AlignerCache& cache, const Vec& dz, const AlignerParams& params,
                     AlignerGrads& grads) {
    if (cache.pooled.size() != params.in_dim() || cache.hidden.size() != params.hidden_dim())
        throw std::invalid_argument("reembed_backward: cache does not match parameters");
    if (dz.size() != params.out_dim())
        throw std::invalid_argument("reembed_backward: dz has wrong dimension");

    add_outer(grads.w2, dz, cache.hidden);
    axpy(1.0, dz, grads.b2);

    Vec dhidden = matvec_t(params.w2, dz);
    // Through dropout scaling and the ReLU subgradient (0 at exactly 0).
    Vec da(params.hidden_dim(), 0.0);
    for (std::size_t i = 0; i < da.size(); ++i)
        da[i] = dhidden[i] * cache.dropout_mask[i] * (cache.pre_activation[i] > 0.0 ? 1.0 : 0.0);

    add_outer(grads.w1, da, cache.pooled);
    axpy(1.0, da, grads.b1);
    return matvec_t(params.w1, da);
}

}  // namespace genlie
