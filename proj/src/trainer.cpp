#include "genlie/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "genlie/rng.hpp"
#include "genlie/text.hpp"

namespace genlie {

namespace {

std::size_t bounded(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

// Adversary refitting needs to outpace the embedding it chases.
constexpr double kHeadRefitLr = 0.05;

template <typename T>
void shuffle_seeded(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

}  // namespace

AdamState init_adam_state(const std::vector<TensorRef>& params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.size, 0.0);
        s.v.emplace_back(p.size, 0.0);
    }
    return s;
}

void adam_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               AdamState& state, double lr, double weight_decay, double beta1, double beta2,
               double epsilon) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: tensor count mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        if (params[ti].size != grads[ti].size)
            throw std::invalid_argument("adam_step: shape mismatch on " + params[ti].name);
        for (std::size_t i = 0; i < params[ti].size; ++i) {
            const double raw = grads[ti].data[i];
            if (!std::isfinite(raw))
                throw std::runtime_error("non-finite gradient in tensor '" + params[ti].name + "'");
            const double g = raw + weight_decay * params[ti].data[i];
            double& m = state.m[ti][i];
            double& v = state.v[ti][i];
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            params[ti].data[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
        }
    }
}

BatchPlan make_batches(const CorpusManifest& manifest, int batch_size, std::uint64_t seed,
                       int epoch) {
    if (manifest.tracks.empty()) throw std::invalid_argument("make_batches: empty dataset");
    if (batch_size < 2) throw std::invalid_argument("make_batches: batch size must be >= 2");
    auto rng = derived_rng(seed, "batch", static_cast<std::uint64_t>(epoch));

    // Per label: group by speaker, shuffle within and across groups, then
    // round-robin over speakers so neighbours differ in speaker when possible.
    std::array<std::vector<std::size_t>, 2> label_seq;
    for (int label = 0; label < 2; ++label) {
        std::map<std::string, std::vector<std::size_t>> by_speaker;
        for (std::size_t i = 0; i < manifest.tracks.size(); ++i)
            if (manifest.tracks[i].label == label)
                by_speaker[manifest.tracks[i].speaker_id].push_back(i);
        std::vector<std::vector<std::size_t>> groups;
        for (auto& [_, g] : by_speaker) {
            shuffle_seeded(g, rng);
            groups.push_back(std::move(g));
        }
        shuffle_seeded(groups, rng);
        bool emitted = true;
        std::size_t cursor = 0;
        while (emitted) {
            emitted = false;
            for (auto& g : groups)
                if (cursor < g.size()) {
                    label_seq[label].push_back(g[cursor]);
                    emitted = true;
                }
            ++cursor;
        }
    }

    // Proportional interleave of the two label streams.
    const std::size_t n0 = label_seq[0].size(), n1 = label_seq[1].size();
    std::vector<std::size_t> merged;
    merged.reserve(n0 + n1);
    std::size_t i0 = 0, i1 = 0;
    while (i0 < n0 || i1 < n1) {
        if (i1 >= n1 || (i0 < n0 && i0 * (n1 + 1) <= i1 * (n0 + 1)))
            merged.push_back(label_seq[0][i0++]);
        else
            merged.push_back(label_seq[1][i1++]);
    }

    BatchPlan plan;
    plan.single_label_warning = (n0 == 0 || n1 == 0);
    for (std::size_t pos = 0; pos < merged.size(); pos += batch_size) {
        const std::size_t end = std::min(pos + batch_size, merged.size());
        plan.batches.emplace_back(merged.begin() + pos, merged.begin() + end);
    }
    return plan;
}

std::vector<Vec> pool_corpus(const CorpusManifest& manifest, const EncoderHandle& encoder,
                             const PreprocessConfig& preprocess_cfg,
                             bool use_temporal_segmentation) {
    if (!encoder.bank == !encoder.synthetic)
        throw std::invalid_argument("exactly one encoder (bank or synthetic) must be set");
    PreprocessConfig cfg = preprocess_cfg;
    if (!use_temporal_segmentation) {
        // Whole video as a single segment, same 128-frame budget.
        cfg.frames_per_segment = cfg.n_segments * cfg.frames_per_segment;
        cfg.n_segments = 1;
    }
    std::vector<Vec> pooled;
    pooled.reserve(manifest.tracks.size());
    for (const auto& track : manifest.tracks) {
        std::vector<Vec> features;
        if (encoder.bank) {
            features = encode_segments(*encoder.bank, track.video_id,
                                       static_cast<std::size_t>(cfg.n_segments));
        } else {
            const SegmentSelection sel = preprocess(track, cfg);
            features = encode_segments(*encoder.synthetic, track, sel);
        }
        pooled.push_back(mean_pool(features));
    }
    return pooled;
}

double speaker_probe_accuracy(const std::vector<Vec>& embeddings,
                              const std::vector<int>& speaker_labels, std::size_t n_classes,
                              std::uint64_t seed) {
    (void)seed;  // probe is convex; zero init keeps it deterministic
    if (embeddings.empty()) throw std::invalid_argument("speaker probe: empty input");
    const std::size_t n = embeddings.size();
    const std::size_t dim = embeddings.front().size();

    // Standardize per dimension for conditioning.
    Vec mean(dim, 0.0), sd(dim, 0.0);
    for (const Vec& e : embeddings) axpy(1.0, e, mean);
    for (double& v : mean) v /= static_cast<double>(n);
    for (const Vec& e : embeddings)
        for (std::size_t d = 0; d < dim; ++d) sd[d] += (e[d] - mean[d]) * (e[d] - mean[d]);
    for (double& v : sd) v = std::sqrt(v / static_cast<double>(n)) + 1e-8;
    std::vector<Vec> x(n, Vec(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) x[i][d] = (embeddings[i][d] - mean[d]) / sd[d];

    Mat w(n_classes, dim);
    Vec b(n_classes, 0.0);
    Mat gw(n_classes, dim);
    Vec gb(n_classes, 0.0);
    std::vector<TensorRef> params{{"probe_w", w.data.data(), w.size()}, {"probe_b", b.data(), b.size()}};
    std::vector<TensorRef> grads{{"probe_w", gw.data.data(), gw.size()}, {"probe_b", gb.data(), gb.size()}};
    AdamState state = init_adam_state(params);

    const int steps = 300;
    for (int step = 0; step < steps; ++step) {
        std::fill(gw.data.begin(), gw.data.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            Vec logits = matvec(w, x[i]);
            axpy(1.0, b, logits);
            const double mx = *std::max_element(logits.begin(), logits.end());
            double sum = 0.0;
            for (double& l : logits) {
                l = std::exp(l - mx);
                sum += l;
            }
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double p = logits[c] / sum;
                const double d = (p - (speaker_labels[i] == static_cast<int>(c) ? 1.0 : 0.0)) /
                                 static_cast<double>(n);
                double* gw_row = &gw.data[c * dim];
                for (std::size_t k = 0; k < dim; ++k) gw_row[k] += d * x[i][k];
                gb[c] += d;
            }
        }
        adam_step(params, grads, state, 0.1, 0.0, 0.9, 0.999, 1e-8);
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec logits = matvec(w, x[i]);
        axpy(1.0, b, logits);
        const auto best = std::max_element(logits.begin(), logits.end());
        if (static_cast<int>(best - logits.begin()) == speaker_labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

EvalReport evaluate(const ModelParams& params, const CorpusManifest& manifest,
                    const std::vector<Vec>& pooled, std::uint64_t seed) {
    if (pooled.empty()) throw std::invalid_argument("evaluate: empty eval set");
    EvalReport report;
    const EvalOutput out = model_evaluate(params, pooled);
    report.scores = out.probabilities;
    report.predictions.reserve(pooled.size());
    std::vector<int> labels;
    std::vector<int> speakers;
    for (std::size_t i = 0; i < manifest.tracks.size(); ++i) {
        labels.push_back(manifest.tracks[i].label);
        speakers.push_back(manifest.speaker_index.at(manifest.tracks[i].speaker_id));
        report.predictions.push_back(out.probabilities[i] >= 0.5 ? 1 : 0);
    }
    report.metrics = compute_metrics(report.scores, report.predictions, labels);
    report.speaker_probe_acc = speaker_probe_accuracy(
        out.embeddings, speakers, manifest.speaker_index.size(), splitmix64(seed ^ 0x70726f6265ULL));
    return report;
}

TrainResult train(const CorpusManifest& manifest, const EncoderHandle& encoder,
                  const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    const bool use_id = config.ablation.use_id_loss;
    const bool use_tri = config.ablation.use_triplet_loss;
    if ((use_id || use_tri) && config.batch_size < 2)
        throw std::invalid_argument("batch_size must be >= 2 with identity or triplet loss");
    if (use_id && manifest.speaker_index.size() < 2)
        throw std::invalid_argument("identity loss needs at least 2 speakers (C >= 2)");

    LossWeights weights = config.loss_weights;
    if (!use_id) weights.alpha = 0.0;
    if (!use_tri) weights.beta = 0.0;

    const std::vector<Vec> pooled =
        pool_corpus(manifest, encoder, config.preprocess, config.ablation.use_temporal_segmentation);
    const std::size_t in_dim = pooled.front().size();
    const std::size_t out_dim = config.ablation.use_reembedding ? config.out_dim : in_dim;

    auto init_rng = derived_rng(config.seed, "init");
    ModelParams params =
        init_model(in_dim, config.hidden_dim, out_dim, std::max<std::size_t>(manifest.speaker_index.size(), 1),
                   config.dropout_rate, config.ablation.use_reembedding, init_rng);

    std::vector<int> labels, speakers;
    for (const auto& t : manifest.tracks) {
        labels.push_back(t.label);
        speakers.push_back(manifest.speaker_index.at(t.speaker_id));
    }

    // Frozen aligner tensors are excluded from updates when re-embedding is
    // ablated so weight decay cannot silently mutate them.
    auto all_params = model_tensors(params);
    ModelGrads grads = zero_grads(params);
    auto all_grads = grad_tensors(grads);
    const bool refine_head = use_id && weights.alpha > 0.0 && config.speaker_head_steps > 0;
    std::vector<TensorRef> opt_params, opt_grads;
    for (std::size_t i = 0; i < all_params.size(); ++i) {
        const bool aligner_tensor = all_params[i].name == "W1" || all_params[i].name == "b1" ||
                                    all_params[i].name == "W2" || all_params[i].name == "b2";
        const bool head_tensor = all_params[i].name == "spk_W" || all_params[i].name == "spk_b";
        if (aligner_tensor && !config.ablation.use_reembedding) continue;
        // With adversary refinement the speaker head is trained only by the
        // dedicated refit loop; letting the joint step also touch it leaves
        // the head stale and the reversed gradient pointing nowhere useful.
        if (head_tensor && refine_head) continue;
        opt_params.push_back(all_params[i]);
        opt_grads.push_back(all_grads[i]);
    }
    AdamState adam = init_adam_state(opt_params);

    // Separate optimizer state for the adversary-refinement steps.
    std::vector<TensorRef> head_params;
    for (std::size_t i = 0; i < all_params.size(); ++i)
        if (all_params[i].name == "spk_W" || all_params[i].name == "spk_b")
            head_params.push_back(all_params[i]);
    AdamState head_adam = init_adam_state(head_params);

    auto dropout_rng = derived_rng(config.seed, "dropout");
    const BatchFlags flags{use_id, use_tri};

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const BatchPlan plan = make_batches(manifest, config.batch_size, config.seed, epoch);
        result.single_label_warning = result.single_label_warning || plan.single_label_warning;

        LossBreakdown epoch_losses;
        std::size_t samples_seen = 0;
        for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
            const auto& batch = plan.batches[bi];
            if (refine_head) {
                // Refit the adversary on the whole corpus before every joint
                // step so the reversed gradient reflects a near-optimal
                // speaker classifier. With a converged head, raising L_id is
                // only possible by mixing speaker clusters; with a stale one
                // the embedding just outruns the boundaries and diverges.
                const EvalOutput emb = model_evaluate(params, pooled);
                for (int step = 0; step < config.speaker_head_steps; ++step) {
                    HeadGrads hg = zero_head_grads(params.heads);
                    speaker_forward_backward(emb.embeddings, speakers, params.heads, weights.lambda,
                                             hg);
                    std::vector<TensorRef> refs{{"spk_W", hg.spk_w.data.data(), hg.spk_w.size()},
                                                {"spk_b", hg.spk_b.data(), hg.spk_b.size()}};
                    adam_step(head_params, refs, head_adam, kHeadRefitLr, config.weight_decay,
                              config.adam_beta1, config.adam_beta2, config.adam_epsilon);
                }
            }
            std::vector<Vec> bx;
            std::vector<int> by, bs;
            for (std::size_t idx : batch) {
                bx.push_back(pooled[idx]);
                by.push_back(labels[idx]);
                bs.push_back(speakers[idx]);
            }
            for (auto& g : all_grads) std::fill(g.data, g.data + g.size, 0.0);

            const BatchResult br = model_forward_backward(params, bx, by, bs, weights, flags,
                                                          PassMode::Train, dropout_rng, &grads);
            if (!std::isfinite(br.losses.l_total))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(bi));
            adam_step(opt_params, opt_grads, adam, config.learning_rate, config.weight_decay,
                      config.adam_beta1, config.adam_beta2, config.adam_epsilon);


            const double w = static_cast<double>(batch.size());
            epoch_losses.l_cls += br.losses.l_cls * w;
            epoch_losses.l_id += br.losses.l_id * w;
            epoch_losses.l_tri += br.losses.l_tri * w;
            epoch_losses.l_total += br.losses.l_total * w;
            epoch_losses.triplet_count += br.losses.triplet_count;
            samples_seen += batch.size();
        }
        const double inv = 1.0 / static_cast<double>(samples_seen);
        epoch_losses.l_cls *= inv;
        epoch_losses.l_id *= inv;
        epoch_losses.l_tri *= inv;
        epoch_losses.l_total *= inv;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.losses = epoch_losses;
        const EvalReport ev = evaluate(params, manifest, pooled, config.seed);
        rec.metrics = ev.metrics;
        rec.speaker_probe_acc = ev.speaker_probe_acc;
        result.history.push_back(rec);
    }
    result.params = std::move(params);
    return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write history file: " + path.string());
    out << "epoch,l_cls,l_id,l_tri,l_total,f1,acc,auc,speaker_probe_acc\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << fmt_double(r.losses.l_cls) << ',' << fmt_double(r.losses.l_id)
            << ',' << fmt_double(r.losses.l_tri) << ',' << fmt_double(r.losses.l_total) << ','
            << fmt_double(r.metrics.f1) << ',' << fmt_double(r.metrics.acc) << ','
            << (r.metrics.auc_defined ? fmt_double(r.metrics.auc) : std::string("nan")) << ','
            << fmt_double(r.speaker_probe_acc) << "\n";
    }
}

}  // namespace genlie
