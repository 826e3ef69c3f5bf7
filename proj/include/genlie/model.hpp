#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "genlie/aligner.hpp"
#include "genlie/heads.hpp"

namespace genlie {

struct ModelParams {
    AlignerParams aligner;
    HeadParams heads;
    bool use_reembedding = true;  // false: z = pooled (heads sized to the encoder dim)

    std::size_t embed_dim() const { return heads.embed_dim(); }
};

struct ModelGrads {
    AlignerGrads aligner;
    HeadGrads heads;
};

// Flat view over a parameter (or gradient) tensor, for the optimizer and
// gradient checks.
struct TensorRef {
    std::string name;
    double* data;
    std::size_t size;
};

std::vector<TensorRef> model_tensors(ModelParams& p);
std::vector<TensorRef> grad_tensors(ModelGrads& g);

ModelParams init_model(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                       std::size_t speaker_classes, double dropout_rate, bool use_reembedding,
                       std::mt19937_64& rng);
ModelGrads zero_grads(const ModelParams& p);

struct BatchFlags {
    bool use_id_loss = true;
    bool use_triplet_loss = true;
};

struct BatchResult {
    LossBreakdown losses;
    Vec probabilities;  // deception probability per sample
};

// One forward+backward over a batch of pooled vectors. Shared-embedding
// gradient is dL_cls/dz + alpha * (GRL-reversed dL_id/dz) + beta * dL_tri/dz;
// speaker-head parameter gradients are not reversed.
BatchResult model_forward_backward(const ModelParams& params, const std::vector<Vec>& pooled,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& speaker_labels,
                                   const LossWeights& weights, const BatchFlags& flags,
                                   PassMode mode, std::mt19937_64& dropout_rng, ModelGrads* grads);

// Forward-only component losses (eval-mode dropout), for finite differences.
LossBreakdown model_forward_losses(const ModelParams& params, const std::vector<Vec>& pooled,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& speaker_labels,
                                   const LossWeights& weights, const BatchFlags& flags);

// Eval-mode deception probabilities and embeddings.
struct EvalOutput {
    Vec probabilities;
    std::vector<Vec> embeddings;
};
EvalOutput model_evaluate(const ModelParams& params, const std::vector<Vec>& pooled);

struct GradCheckEntry {
    std::string tensor;
    double max_rel_error;
};
struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
};

// Central finite differences over every parameter scalar. The finite-
// difference target for tensors upstream of the GRL uses the adversarial
// surrogate l_cls - lambda*alpha*l_id + beta*l_tri, whose gradient is what
// the reversed backward pass computes; speaker-head tensors use l_total.
// Data is resampled if any ReLU pre-activation or triplet hinge sits within
// the kink margin.
GradCheckReport gradient_check(std::uint64_t seed, std::size_t in_dim, std::size_t hidden_dim,
                               std::size_t out_dim, std::size_t speaker_classes,
                               std::size_t batch_size, const LossWeights& weights,
                               double step = 1e-5);

// Checkpoint: header {magic "GLM1", u32 D, u32 H, u32 D_out, u32 C}, then
// named tensors as (u16 name_len, name, row-major little-endian f64).
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace genlie
