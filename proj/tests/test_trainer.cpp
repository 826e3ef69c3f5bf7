#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "genlie/config.hpp"
#include "genlie/rng.hpp"
#include "genlie/synth.hpp"
#include "genlie/trainer.hpp"

using namespace genlie;
namespace fs = std::filesystem;

namespace {

SynthCorpus small_corpus(std::uint64_t seed, int speakers = 4, int videos = 4) {
    SynthConfig cfg;
    cfg.n_speakers = speakers;
    cfg.videos_per_speaker = videos;
    cfg.frames_per_video = 48;
    cfg.cue_burst_strength = 0.5;
    cfg.seed = seed;
    return generate_corpus(cfg);
}

TrainConfig small_train_config() {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 3;
    cfg.hidden_dim = 16;
    cfg.out_dim = 8;
    cfg.dropout_rate = 0.0;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("Adam leaves parameters alone on zero gradient without decay") {
    Vec param{1.5, -2.0};
    Vec grad{0.0, 0.0};
    std::vector<TensorRef> p{{"p", param.data(), param.size()}};
    std::vector<TensorRef> g{{"p", grad.data(), grad.size()}};
    AdamState state = init_adam_state(p);
    adam_step(p, g, state, 0.1, 0.0, 0.9, 0.999, 1e-8);
    CHECK(param == Vec{1.5, -2.0});
    CHECK(state.t == 1);
}

TEST_CASE("first Adam step is approximately -lr * sign(g)") {
    Vec param{0.0, 0.0};
    Vec grad{0.3, -0.004};
    std::vector<TensorRef> p{{"p", param.data(), param.size()}};
    std::vector<TensorRef> g{{"p", grad.data(), grad.size()}};
    AdamState state = init_adam_state(p);
    adam_step(p, g, state, 0.1, 0.0, 0.9, 0.999, 1e-8);
    CHECK(param[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(param[1] == doctest::Approx(0.1).epsilon(1e-5));
}

TEST_CASE("3-step scalar trajectory matches an independent Adam oracle") {
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const Vec gradient_schedule{0.3, -0.2, 0.05};

    double param = 1.0;
    std::vector<TensorRef> p{{"p", &param, 1}};
    AdamState state = init_adam_state(p);
    for (double g_t : gradient_schedule) {
        double g = g_t;
        std::vector<TensorRef> g_ref{{"p", &g, 1}};
        adam_step(p, g_ref, state, lr, 0.0, b1, b2, eps);
    }

    // Independent oracle, written from the update equations directly.
    double theta = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 3; ++t) {
        const double g = gradient_schedule[t - 1];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double m_hat = m / (1.0 - std::pow(b1, t));
        const double v_hat = v / (1.0 - std::pow(b2, t));
        theta -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    CHECK(std::abs(param - theta) < 1e-12);
}

TEST_CASE("coupled weight decay folds into the gradient") {
    double param = 2.0;
    double grad = 0.0;
    std::vector<TensorRef> p{{"p", &param, 1}};
    std::vector<TensorRef> g{{"p", &grad, 1}};
    AdamState state = init_adam_state(p);
    adam_step(p, g, state, 0.1, 0.5, 0.9, 0.999, 1e-8);
    // Effective gradient is wd * theta = 1.0 > 0, so the parameter shrinks.
    CHECK(param < 2.0);
}

TEST_CASE("batching partitions the corpus") {
    const SynthCorpus corpus = small_corpus(1);  // 16 videos
    const BatchPlan plan = make_batches(corpus.manifest, 8, 42, 0);
    REQUIRE(plan.batches.size() == 2);
    CHECK_FALSE(plan.single_label_warning);
    std::set<std::size_t> seen;
    for (const auto& b : plan.batches) {
        CHECK(b.size() == 8);
        seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == 16);
}

TEST_CASE("batching is deterministic in (seed, epoch) and varies across epochs") {
    const SynthCorpus corpus = small_corpus(2);
    const BatchPlan a = make_batches(corpus.manifest, 8, 7, 3);
    const BatchPlan b = make_batches(corpus.manifest, 8, 7, 3);
    CHECK(a.batches == b.batches);
    const BatchPlan c = make_batches(corpus.manifest, 8, 7, 4);
    CHECK(a.batches != c.batches);
}

TEST_CASE("single-label corpus raises the warning flag") {
    SynthCorpus corpus = small_corpus(3, 2, 4);
    for (auto& t : corpus.manifest.tracks) t.label = 0;  // force a single-label corpus
    const BatchPlan plan = make_batches(corpus.manifest, 4, 42, 0);
    CHECK(plan.single_label_warning);
}

TEST_CASE("zero-epoch training returns initial params and empty history") {
    const SynthCorpus corpus = small_corpus(4);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;
    TrainConfig cfg = small_train_config();
    cfg.epochs = 0;
    const TrainResult r = train(corpus.manifest, handle, cfg);
    CHECK(r.history.empty());
    CHECK(r.params.aligner.in_dim() == 32);
    CHECK(r.params.embed_dim() == cfg.out_dim);
}

TEST_CASE("identity loss requires at least two speakers") {
    const SynthCorpus corpus = small_corpus(5, /*speakers=*/1, /*videos=*/8);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;
    CHECK_THROWS_AS(train(corpus.manifest, handle, small_train_config()), std::invalid_argument);
}

TEST_CASE("zero auxiliary weights match disabling the auxiliary losses") {
    const SynthCorpus corpus = small_corpus(6);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;

    TrainConfig zeroed = small_train_config();
    zeroed.loss_weights.alpha = 0.0;
    zeroed.loss_weights.beta = 0.0;

    TrainConfig ablated = small_train_config();
    ablated.ablation.use_id_loss = false;
    ablated.ablation.use_triplet_loss = false;

    const TrainResult a = train(corpus.manifest, handle, zeroed);
    const TrainResult b = train(corpus.manifest, handle, ablated);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].losses.l_cls == b.history[e].losses.l_cls);
        CHECK(a.history[e].losses.l_total == b.history[e].losses.l_total);
        CHECK(a.history[e].metrics.acc == b.history[e].metrics.acc);
    }
}

TEST_CASE("training with re-embedding ablated keeps aligner tensors frozen") {
    const SynthCorpus corpus = small_corpus(7);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;
    TrainConfig cfg = small_train_config();
    cfg.ablation.use_reembedding = false;
    const TrainResult r = train(corpus.manifest, handle, cfg);
    CHECK_FALSE(r.params.use_reembedding);
    CHECK(r.params.embed_dim() == 32);  // heads sized to the encoder dim
    REQUIRE(r.history.size() == 3);
}

TEST_CASE("training history is byte-identical across identical runs") {
    const SynthCorpus corpus = small_corpus(8);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;
    const TrainConfig cfg = small_train_config();

    const fs::path dir = fs::temp_directory_path() / "genlie_test_history";
    fs::create_directories(dir);
    const TrainResult a = train(corpus.manifest, handle, cfg);
    const TrainResult b = train(corpus.manifest, handle, cfg);
    write_history_csv(a.history, dir / "a.csv");
    write_history_csv(b.history, dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK_FALSE(slurp(dir / "a.csv").empty());
    fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip preserves every tensor and eval outputs") {
    const SynthCorpus corpus = small_corpus(9);
    const SyntheticEncoder enc(42, 32);
    EncoderHandle handle;
    handle.synthetic = &enc;
    TrainResult r = train(corpus.manifest, handle, small_train_config());

    const fs::path path = fs::temp_directory_path() / "genlie_test_ckpt.glm1";
    save_checkpoint(r.params, path);
    ModelParams back = load_checkpoint(path);
    fs::remove(path);

    auto orig = model_tensors(r.params);
    auto loaded = model_tensors(back);
    REQUIRE(orig.size() == loaded.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i].name == loaded[i].name);
        REQUIRE(orig[i].size == loaded[i].size);
        for (std::size_t j = 0; j < orig[i].size; ++j) CHECK(orig[i].data[j] == loaded[i].data[j]);
    }
    CHECK(back.use_reembedding == r.params.use_reembedding);
    CHECK(back.aligner.dropout_rate == r.params.aligner.dropout_rate);

    const std::vector<Vec> pooled = pool_corpus(corpus.manifest, handle, PreprocessConfig{}, true);
    const EvalOutput a = model_evaluate(r.params, pooled);
    const EvalOutput b2 = model_evaluate(back, pooled);
    CHECK(a.probabilities == b2.probabilities);
}

TEST_CASE("speaker probe recovers separable speaker structure") {
    auto rng = derived_rng(10, "probe-fixture");
    std::vector<Vec> embeddings;
    std::vector<int> speakers;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) {
            Vec v(4, 0.0);
            v[c] = 5.0;
            for (double& x : v) x += 0.01 * normal01(rng);
            embeddings.push_back(std::move(v));
            speakers.push_back(c);
        }
    CHECK(speaker_probe_accuracy(embeddings, speakers, 3, 42) == 100.0);
}
