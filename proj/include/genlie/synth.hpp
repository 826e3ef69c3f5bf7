#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "genlie/cue.hpp"
#include "genlie/preprocess.hpp"

namespace genlie {

struct SynthConfig {
    int n_speakers = 4;
    int videos_per_speaker = 4;
    int frames_per_video = 96;
    double deception_rate = 0.5;
    double cue_burst_strength = 1.0;   // AU amplitude added during planted bursts
    int burst_length_frames = 8;
    double identity_confound = 0.0;    // rho: fraction of gaze dims carrying a speaker offset
    double noise_std = 0.1;
    double fps = 30.0;
    int au_channels = 6;
    int keypoints = 4;
    std::uint64_t seed = 42;
};

struct SynthCorpus {
    CorpusManifest manifest;
    // Ground-truth planted burst frame indices per video (empty for truthful).
    std::map<std::string, std::vector<int>> burst_frames;
};

// Deterministic given the seed. Truthful videos carry baseline cue noise;
// deceptive videos additionally carry sparse AU bursts; every speaker gets a
// persistent gaze-descriptor offset on a rho-fraction of dimensions, the
// linearly recoverable nuisance signal the GRL is supposed to remove.
SynthCorpus generate_corpus(const SynthConfig& config);

// Fraction of a video's planted burst frames covered by the selection.
double selection_hit_rate(const SegmentSelection& selection, const std::string& video_id,
                          const std::vector<int>& burst_frames);

void save_burst_ground_truth(const SynthCorpus& corpus, const std::filesystem::path& path);
std::map<std::string, std::vector<int>> load_burst_ground_truth(const std::filesystem::path& path);

}  // namespace genlie
