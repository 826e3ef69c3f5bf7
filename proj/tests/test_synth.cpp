#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "genlie/synth.hpp"

using namespace genlie;
namespace fs = std::filesystem;

namespace {

std::string serialize_corpus(const SynthCorpus& corpus) {
    std::ostringstream out;
    for (const auto& t : corpus.manifest.tracks) serialize_cue_track(t, out);
    return out.str();
}

// Mean gaze descriptor over every frame of every video of one speaker.
Vec speaker_mean_gaze(const CorpusManifest& manifest, const std::string& speaker_id) {
    Vec mean(kGazeDim, 0.0);
    std::size_t n = 0;
    for (const auto& t : manifest.tracks) {
        if (t.speaker_id != speaker_id) continue;
        for (const auto& f : t.frames) {
            for (std::size_t i = 0; i < kGazeDim; ++i) mean[i] += f.gaze[i];
            ++n;
        }
    }
    for (double& v : mean) v /= static_cast<double>(n);
    return mean;
}

}  // namespace

TEST_CASE("generation is deterministic given the seed") {
    SynthConfig cfg;
    cfg.n_speakers = 3;
    cfg.videos_per_speaker = 3;
    cfg.frames_per_video = 64;
    cfg.identity_confound = 0.5;
    cfg.seed = 42;
    const SynthCorpus a = generate_corpus(cfg);
    const SynthCorpus b = generate_corpus(cfg);
    CHECK(serialize_corpus(a) == serialize_corpus(b));
    CHECK(a.burst_frames == b.burst_frames);

    cfg.seed = 43;
    const SynthCorpus c = generate_corpus(cfg);
    CHECK(serialize_corpus(a) != serialize_corpus(c));
}

TEST_CASE("corpus shape follows the config") {
    SynthConfig cfg;
    cfg.n_speakers = 3;
    cfg.videos_per_speaker = 4;
    cfg.frames_per_video = 48;
    cfg.au_channels = 5;
    cfg.keypoints = 3;
    const SynthCorpus corpus = generate_corpus(cfg);
    CHECK(corpus.manifest.tracks.size() == 12);
    CHECK(corpus.manifest.speaker_index.size() == 3);
    CHECK(corpus.manifest.au_count == 5);
    CHECK(corpus.manifest.keypoint_count == 3);
    for (const auto& t : corpus.manifest.tracks) {
        CHECK(t.frames.size() == 48);
        CHECK(t.au_count() == 5);
        CHECK(t.keypoint_count() == 3);
    }
}

TEST_CASE("deceptive videos carry planted bursts, truthful ones none") {
    SynthConfig cfg;
    cfg.n_speakers = 4;
    cfg.videos_per_speaker = 4;
    cfg.frames_per_video = 96;
    cfg.cue_burst_strength = 2.0;
    const SynthCorpus corpus = generate_corpus(cfg);
    int deceptive = 0, truthful = 0;
    for (const auto& t : corpus.manifest.tracks) {
        const auto& bursts = corpus.burst_frames.at(t.video_id);
        if (t.label == 1) {
            ++deceptive;
            CHECK_FALSE(bursts.empty());
            for (int f : bursts) {
                CHECK(f >= 8);        // bursts avoid the leading burst_length frames
                CHECK(f < 96 - 8);    // and the trailing ones
            }
        } else {
            ++truthful;
            CHECK(bursts.empty());
        }
    }
    CHECK(deceptive > 0);
    CHECK(truthful > 0);
}

TEST_CASE("rho=0 removes the speaker gaze offsets") {
    SynthConfig cfg;
    cfg.n_speakers = 4;
    cfg.videos_per_speaker = 6;
    cfg.frames_per_video = 96;
    cfg.identity_confound = 0.0;
    cfg.seed = 7;
    const SynthCorpus corpus = generate_corpus(cfg);
    // Without offsets, per-speaker mean gaze is pure noise around zero:
    // sigma/sqrt(6*96) < 0.005, so 0.05 is a 10-sigma bound.
    for (const auto& [spk, _] : corpus.manifest.speaker_index) {
        const Vec mean = speaker_mean_gaze(corpus.manifest, spk);
        for (double v : mean) CHECK(std::abs(v) < 0.05);
    }

    cfg.identity_confound = 0.5;
    const SynthCorpus confounded = generate_corpus(cfg);
    double max_offset = 0.0;
    for (const auto& [spk, _] : confounded.manifest.speaker_index) {
        const Vec mean = speaker_mean_gaze(confounded.manifest, spk);
        for (double v : mean) max_offset = std::max(max_offset, std::abs(v));
    }
    CHECK(max_offset > 0.2);  // unit-scale offsets on 18 of 36 dims
}

TEST_CASE("hit rate extremes") {
    SegmentSelection sel;
    sel.video_id = "v";
    sel.segments = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    CHECK(selection_hit_rate(sel, "v", {2, 5}) == 1.0);
    CHECK(selection_hit_rate(sel, "v", {10, 11}) == 0.0);
    CHECK(selection_hit_rate(sel, "v", {3, 9}) == 0.5);
    CHECK_THROWS_AS(selection_hit_rate(sel, "other", {1}), std::exception);
    CHECK_THROWS_AS(selection_hit_rate(sel, "v", {}), std::exception);
}

TEST_CASE("burst ground truth round trips through its text format") {
    SynthConfig cfg;
    cfg.n_speakers = 2;
    cfg.videos_per_speaker = 4;
    cfg.frames_per_video = 64;
    const SynthCorpus corpus = generate_corpus(cfg);
    const fs::path path = fs::temp_directory_path() / "genlie_test_bursts.txt";
    save_burst_ground_truth(corpus, path);
    const auto back = load_burst_ground_truth(path);
    CHECK(back == corpus.burst_frames);
    fs::remove(path);
}

TEST_CASE("AU selection beats uniform on a strongly bursty corpus") {
    SynthConfig cfg;
    cfg.n_speakers = 2;
    cfg.videos_per_speaker = 6;
    cfg.frames_per_video = 512;
    cfg.cue_burst_strength = 5.0;  // 50x the noise floor
    cfg.seed = 11;
    const SynthCorpus corpus = generate_corpus(cfg);

    PreprocessConfig au_cfg;
    au_cfg.strategy = Strategy::AU;
    PreprocessConfig uni_cfg;
    uni_cfg.strategy = Strategy::Uniform;

    double au_total = 0.0, uni_total = 0.0;
    int counted = 0;
    for (const auto& t : corpus.manifest.tracks) {
        const auto& bursts = corpus.burst_frames.at(t.video_id);
        if (bursts.empty()) continue;
        au_total += selection_hit_rate(preprocess(t, au_cfg), t.video_id, bursts);
        uni_total += selection_hit_rate(preprocess(t, uni_cfg), t.video_id, bursts);
        ++counted;
    }
    REQUIRE(counted > 0);
    CHECK(au_total / counted > uni_total / counted);
    // Bursts are the AU-score maxima, but a segment holding several bursts
    // can exceed its per-segment budget, so the ceiling is below 1.0.
    CHECK(au_total / counted > 0.75);
}

TEST_CASE("generator rejects videos too short for burst placement") {
    SynthConfig cfg;
    cfg.frames_per_video = 16;
    cfg.burst_length_frames = 8;  // 3 * 8 > 16
    CHECK_THROWS_AS(generate_corpus(cfg), std::exception);
}
