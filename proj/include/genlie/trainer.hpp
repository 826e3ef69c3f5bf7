#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genlie/cue.hpp"
#include "genlie/encoder.hpp"
#include "genlie/heads.hpp"
#include "genlie/metrics.hpp"
#include "genlie/model.hpp"
#include "genlie/preprocess.hpp"

namespace genlie {

struct AblationFlags {
    bool use_temporal_segmentation = true;  // off: whole video is one segment, 128-frame budget
    bool use_reembedding = true;            // off: z = MeanPool(H)
    bool use_id_loss = true;                // off: alpha forced to 0
    bool use_triplet_loss = true;           // off: beta forced to 0
};

struct TrainConfig {
    double learning_rate = 1e-5;
    double weight_decay = 1e-4;
    int batch_size = 8;
    int epochs = 10;
    std::uint64_t seed = 42;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    LossWeights loss_weights;
    PreprocessConfig preprocess;
    AblationFlags ablation;
    std::size_t hidden_dim = 1024;
    std::size_t out_dim = 768;
    double dropout_rate = 0.3;
    int checkpoint_interval = 0;  // epochs; 0 = final only
    // Extra per-batch speaker-head refinement steps (unscaled L_id, aligner
    // frozen). Keeps the adversary near-optimal so the reversed gradient
    // actually strips identity information instead of chasing a stale head.
    int speaker_head_steps = 5;
};

struct AdamState {
    std::vector<Vec> m;  // per tensor, first moment
    std::vector<Vec> v;  // per tensor, second moment
    long t = 0;
};

AdamState init_adam_state(const std::vector<TensorRef>& params);

// Classic Adam with L2-coupled weight decay (decay folded into the gradient).
void adam_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               AdamState& state, double lr, double weight_decay, double beta1, double beta2,
               double epsilon);

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches;  // indices into the manifest's tracks
    bool single_label_warning = false;
};

// Seeded, label- and speaker-stratified batching; deterministic given
// (seed, epoch); last short batch kept.
BatchPlan make_batches(const CorpusManifest& manifest, int batch_size, std::uint64_t seed,
                       int epoch);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown losses;  // means over the epoch's batches
    MetricsReport metrics;
    double speaker_probe_acc = 0.0;  // percent
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    bool single_label_warning = false;
};

// The encoder the pipeline runs against. Exactly one of bank/synthetic set.
struct EncoderHandle {
    const FeatureBank* bank = nullptr;
    const SyntheticEncoder* synthetic = nullptr;
};

// Pooled (mean over segments) encoder features per track, after frame
// selection. These never depend on learnable parameters.
std::vector<Vec> pool_corpus(const CorpusManifest& manifest, const EncoderHandle& encoder,
                             const PreprocessConfig& preprocess_cfg, bool use_temporal_segmentation);

TrainResult train(const CorpusManifest& manifest, const EncoderHandle& encoder,
                  const TrainConfig& config);

struct EvalReport {
    MetricsReport metrics;
    double speaker_probe_acc = 0.0;
    Vec scores;
    std::vector<int> predictions;
};

EvalReport evaluate(const ModelParams& params, const CorpusManifest& manifest,
                    const std::vector<Vec>& pooled, std::uint64_t seed);

// Post-hoc diagnostic: fresh multinomial logistic probe trained on frozen
// embeddings; returns training accuracy in percent.
double speaker_probe_accuracy(const std::vector<Vec>& embeddings,
                              const std::vector<int>& speaker_labels, std::size_t n_classes,
                              std::uint64_t seed);

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace genlie
