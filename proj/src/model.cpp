#include "genlie/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "genlie/binio.hpp"
#include "genlie/rng.hpp"

namespace genlie {

std::vector<TensorRef> model_tensors(ModelParams& p) {
    return {
        {"W1", p.aligner.w1.data.data(), p.aligner.w1.size()},
        {"b1", p.aligner.b1.data(), p.aligner.b1.size()},
        {"W2", p.aligner.w2.data.data(), p.aligner.w2.size()},
        {"b2", p.aligner.b2.data(), p.aligner.b2.size()},
        {"cls_w", p.heads.cls_w.data(), p.heads.cls_w.size()},
        {"cls_b", &p.heads.cls_b, 1},
        {"spk_W", p.heads.spk_w.data.data(), p.heads.spk_w.size()},
        {"spk_b", p.heads.spk_b.data(), p.heads.spk_b.size()},
    };
}

std::vector<TensorRef> grad_tensors(ModelGrads& g) {
    return {
        {"W1", g.aligner.w1.data.data(), g.aligner.w1.size()},
        {"b1", g.aligner.b1.data(), g.aligner.b1.size()},
        {"W2", g.aligner.w2.data.data(), g.aligner.w2.size()},
        {"b2", g.aligner.b2.data(), g.aligner.b2.size()},
        {"cls_w", g.heads.cls_w.data(), g.heads.cls_w.size()},
        {"cls_b", &g.heads.cls_b, 1},
        {"spk_W", g.heads.spk_w.data.data(), g.heads.spk_w.size()},
        {"spk_b", g.heads.spk_b.data(), g.heads.spk_b.size()},
    };
}

ModelParams init_model(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                       std::size_t speaker_classes, double dropout_rate, bool use_reembedding,
                       std::mt19937_64& rng) {
    if (!use_reembedding && in_dim != out_dim)
        throw std::invalid_argument("without re-embedding the head dim must equal the encoder dim");
    ModelParams p;
    p.aligner = init_aligner(in_dim, hidden_dim, out_dim, dropout_rate, rng);
    p.heads = init_heads(out_dim, speaker_classes, rng);
    p.use_reembedding = use_reembedding;
    return p;
}

ModelGrads zero_grads(const ModelParams& p) {
    return {zero_aligner_grads(p.aligner), zero_head_grads(p.heads)};
}

namespace {

struct ForwardState {
    std::vector<Vec> z;
    std::vector<AlignerCache> caches;
};

ForwardState forward_embeddings(const ModelParams& params, const std::vector<Vec>& pooled,
                                PassMode mode, std::mt19937_64& dropout_rng) {
    ForwardState st;
    st.z.reserve(pooled.size());
    if (params.use_reembedding) st.caches.resize(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        if (params.use_reembedding)
            st.z.push_back(reembed_forward(pooled[i], params.aligner, mode, dropout_rng, st.caches[i]));
        else
            st.z.push_back(pooled[i]);
    }
    return st;
}

}  // namespace

BatchResult model_forward_backward(const ModelParams& params, const std::vector<Vec>& pooled,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& speaker_labels,
                                   const LossWeights& weights, const BatchFlags& flags,
                                   PassMode mode, std::mt19937_64& dropout_rng, ModelGrads* grads) {
    if (pooled.empty()) throw std::invalid_argument("model pass: empty batch");
    const std::size_t batch = pooled.size();

    ForwardState st = forward_embeddings(params, pooled, mode, dropout_rng);

    ModelGrads scratch = zero_grads(params);
    ModelGrads& g = grads ? *grads : scratch;

    ClsResult cls = cls_forward_backward(st.z, labels, params.heads, g.heads);

    std::vector<Vec> dz(batch, Vec(params.embed_dim(), 0.0));
    for (std::size_t i = 0; i < batch; ++i) axpy(1.0, cls.dz[i], dz[i]);

    double l_id = 0.0;
    if (flags.use_id_loss) {
        HeadGrads spk_grads = zero_head_grads(params.heads);
        SpeakerResult spk = speaker_forward_backward(st.z, speaker_labels, params.heads,
                                                     weights.lambda, spk_grads);
        l_id = spk.loss;
        // alpha scales the whole identity term; the GRL reversal is already
        // folded into dz_reversed.
        for (std::size_t i = 0; i < batch; ++i) axpy(weights.alpha, spk.dz_reversed[i], dz[i]);
        for (std::size_t r = 0; r < g.heads.spk_w.size(); ++r)
            g.heads.spk_w.data[r] += weights.alpha * spk_grads.spk_w.data[r];
        axpy(weights.alpha, spk_grads.spk_b, g.heads.spk_b);
    }

    double l_tri = 0.0;
    std::size_t triplet_count = 0;
    if (flags.use_triplet_loss) {
        std::vector<Vec> dz_tri(batch, Vec(params.embed_dim(), 0.0));
        const auto triplets = mine_triplets(labels);
        auto [loss, active] = batch_triplet_loss(st.z, triplets, weights.margin, dz_tri);
        l_tri = loss;
        triplet_count = active;
        for (std::size_t i = 0; i < batch; ++i) axpy(weights.beta, dz_tri[i], dz[i]);
    }

    if (params.use_reembedding)
        for (std::size_t i = 0; i < batch; ++i)
            reembed_backward(st.caches[i], dz[i], params.aligner, g.aligner);

    BatchResult result;
    result.losses = total_loss(cls.loss, l_id, l_tri, weights);
    result.losses.triplet_count = triplet_count;
    result.probabilities = std::move(cls.probabilities);
    return result;
}

LossBreakdown model_forward_losses(const ModelParams& params, const std::vector<Vec>& pooled,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& speaker_labels,
                                   const LossWeights& weights, const BatchFlags& flags) {
    auto rng = std::mt19937_64(0);  // unused: eval mode
    ForwardState st = forward_embeddings(params, pooled, PassMode::Eval, rng);
    ModelGrads sink = zero_grads(params);
    ClsResult cls = cls_forward_backward(st.z, labels, params.heads, sink.heads);

    double l_id = 0.0;
    if (flags.use_id_loss) {
        HeadGrads spk_sink = zero_head_grads(params.heads);
        l_id = speaker_forward_backward(st.z, speaker_labels, params.heads, weights.lambda, spk_sink).loss;
    }
    double l_tri = 0.0;
    if (flags.use_triplet_loss) {
        std::vector<Vec> dz_sink(pooled.size(), Vec(params.embed_dim(), 0.0));
        l_tri = batch_triplet_loss(st.z, mine_triplets(labels), weights.margin, dz_sink).first;
    }
    return total_loss(cls.loss, l_id, l_tri, weights);
}

EvalOutput model_evaluate(const ModelParams& params, const std::vector<Vec>& pooled) {
    auto rng = std::mt19937_64(0);  // unused: eval mode
    ForwardState st = forward_embeddings(params, pooled, PassMode::Eval, rng);
    EvalOutput out;
    out.probabilities.reserve(pooled.size());
    for (const Vec& z : st.z) {
        const double logit = dot(params.heads.cls_w, z) + params.heads.cls_b;
        out.probabilities.push_back(1.0 / (1.0 + std::exp(-logit)));
    }
    out.embeddings = std::move(st.z);
    return out;
}

namespace {

// Rejects data whose loss surface has a kink within reach of the FD step.
bool near_kink(const ModelParams& params, const std::vector<Vec>& pooled,
               const std::vector<int>& labels, const LossWeights& weights, double margin) {
    auto rng = std::mt19937_64(0);
    std::vector<Vec> z;
    for (const Vec& x : pooled) {
        AlignerCache cache;
        z.push_back(reembed_forward(x, params.aligner, PassMode::Eval, rng, cache));
        for (double a : cache.pre_activation)
            if (std::abs(a) < margin) return true;
    }
    for (const auto& t : mine_triplets(labels)) {
        const double hinge = squared_distance(z[t.anchor], z[t.positive]) -
                             squared_distance(z[t.anchor], z[t.negative]) + weights.margin;
        if (std::abs(hinge) < margin) return true;
    }
    return false;
}

}  // namespace

GradCheckReport gradient_check(std::uint64_t seed, std::size_t in_dim, std::size_t hidden_dim,
                               std::size_t out_dim, std::size_t speaker_classes,
                               std::size_t batch_size, const LossWeights& weights, double step) {
    if (batch_size < 2) throw std::invalid_argument("gradient_check: batch size must be >= 2");
    constexpr double kKinkMargin = 1e-3;

    ModelParams params;
    std::vector<Vec> pooled;
    std::vector<int> labels, speakers;
    bool ok = false;
    for (std::uint64_t attempt = 0; attempt < 100 && !ok; ++attempt) {
        auto rng = derived_rng(seed, "gradcheck", attempt);
        params = init_model(in_dim, hidden_dim, out_dim, speaker_classes, /*dropout=*/0.0,
                            /*use_reembedding=*/true, rng);
        pooled.assign(batch_size, Vec(in_dim, 0.0));
        labels.resize(batch_size);
        speakers.resize(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            for (double& v : pooled[i]) v = normal01(rng);
            labels[i] = static_cast<int>(i % 2);  // both classes present
            speakers[i] = static_cast<int>(i % speaker_classes);
        }
        ok = !near_kink(params, pooled, labels, weights, kKinkMargin);
    }
    if (!ok) throw std::runtime_error("gradient_check: could not find kink-free data");

    const BatchFlags flags{true, true};
    ModelGrads grads = zero_grads(params);
    auto rng = std::mt19937_64(0);
    model_forward_backward(params, pooled, labels, speakers, weights, flags, PassMode::Train, rng,
                           &grads);

    auto param_refs = model_tensors(params);
    auto grad_refs = grad_tensors(grads);

    GradCheckReport report;
    for (std::size_t t = 0; t < param_refs.size(); ++t) {
        const bool speaker_head =
            param_refs[t].name == "spk_W" || param_refs[t].name == "spk_b";
        // Upstream of the GRL the backward pass computes the gradient of the
        // adversarial surrogate, not of l_total.
        const double id_sign = speaker_head ? 1.0 : -weights.lambda;
        double worst = 0.0;
        for (std::size_t i = 0; i < param_refs[t].size; ++i) {
            double& theta = param_refs[t].data[i];
            const double saved = theta;
            auto surrogate = [&] {
                const LossBreakdown b =
                    model_forward_losses(params, pooled, labels, speakers, weights, flags);
                return b.l_cls + weights.alpha * id_sign * b.l_id + weights.beta * b.l_tri;
            };
            theta = saved + step;
            const double f_plus = surrogate();
            theta = saved - step;
            const double f_minus = surrogate();
            theta = saved;
            const double fd = (f_plus - f_minus) / (2.0 * step);
            const double analytic = grad_refs[t].data[i];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
        report.entries.push_back({param_refs[t].name, worst});
        report.max_rel_error = std::max(report.max_rel_error, worst);
    }
    return report;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    binio::write_magic(out, "GLM1");
    binio::write_u32(out, static_cast<std::uint32_t>(params.aligner.in_dim()));
    binio::write_u32(out, static_cast<std::uint32_t>(params.aligner.hidden_dim()));
    binio::write_u32(out, static_cast<std::uint32_t>(params.aligner.out_dim()));
    binio::write_u32(out, static_cast<std::uint32_t>(params.heads.speaker_classes()));

    auto write_tensor = [&](const std::string& name, const double* data, std::size_t n) {
        binio::write_u16(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        for (std::size_t i = 0; i < n; ++i) binio::write_f64(out, data[i]);
    };
    ModelParams& p = const_cast<ModelParams&>(params);
    for (const auto& t : model_tensors(p)) write_tensor(t.name, t.data, t.size);
    const double dropout = params.aligner.dropout_rate;
    const double reembed = params.use_reembedding ? 1.0 : 0.0;
    write_tensor("dropout_rate", &dropout, 1);
    write_tensor("use_reembedding", &reembed, 1);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    binio::expect_magic(in, "GLM1", path.string());
    const std::uint32_t d = binio::read_u32(in, "D");
    const std::uint32_t h = binio::read_u32(in, "H");
    const std::uint32_t d_out = binio::read_u32(in, "D_out");
    const std::uint32_t c = binio::read_u32(in, "C");

    ModelParams params;
    params.aligner.w1 = Mat(h, d);
    params.aligner.b1 = Vec(h, 0.0);
    params.aligner.w2 = Mat(d_out, h);
    params.aligner.b2 = Vec(d_out, 0.0);
    params.heads.cls_w = Vec(d_out, 0.0);
    params.heads.spk_w = Mat(c, d_out);
    params.heads.spk_b = Vec(c, 0.0);

    double dropout = 0.0, reembed = 1.0;
    std::map<std::string, std::pair<double*, std::size_t>> slots;
    for (const auto& t : model_tensors(params)) slots[t.name] = {t.data, t.size};
    slots["dropout_rate"] = {&dropout, 1};
    slots["use_reembedding"] = {&reembed, 1};

    std::map<std::string, bool> seen;
    while (in.peek() != EOF) {
        const std::uint16_t name_len = binio::read_u16(in, "tensor name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw std::runtime_error(path.string() + ": truncated tensor name");
        auto it = slots.find(name);
        if (it == slots.end())
            throw std::runtime_error(path.string() + ": unknown tensor '" + name + "'");
        for (std::size_t i = 0; i < it->second.second; ++i)
            it->second.first[i] = binio::read_f64(in, name.c_str());
        seen[name] = true;
    }
    for (const auto& [name, slot] : slots)
        if (!seen[name]) throw std::runtime_error(path.string() + ": missing tensor '" + name + "'");

    params.aligner.dropout_rate = dropout;
    params.use_reembedding = reembed != 0.0;
    return params;
}

}  // namespace genlie
