#include "genlie/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "genlie/rng.hpp"
#include "genlie/text.hpp"

namespace genlie {

namespace {

constexpr double kSpeakerOffsetScale = 1.0;

std::string speaker_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    return buf;
}

std::string video_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%05d", i);
    return buf;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& config) {
    if (config.n_speakers < 1 || config.videos_per_speaker < 1 || config.frames_per_video < 1 ||
        config.burst_length_frames < 1 || config.au_channels < 1 || config.keypoints < 1)
        throw std::invalid_argument("synth: all counts must be >= 1");
    if (!(config.deception_rate > 0.0 && config.deception_rate < 1.0))
        throw std::invalid_argument("synth: deception_rate must be in (0,1)");
    if (config.identity_confound < 0.0 || config.identity_confound > 1.0)
        throw std::invalid_argument("synth: identity_confound must be in [0,1]");
    if (config.cue_burst_strength < 0.0)
        throw std::invalid_argument("synth: cue_burst_strength must be >= 0");
    // Bursts avoid the first and last burst_length frames.
    if (3 * config.burst_length_frames > config.frames_per_video)
        throw std::invalid_argument("synth: burst does not fit the video (need T >= 3*burst_length)");

    const int frame_count = config.frames_per_video;
    const int burst_len = config.burst_length_frames;
    const int n_bursts = std::max(1, frame_count / 48);
    const std::size_t confound_dims =
        static_cast<std::size_t>(std::floor(config.identity_confound * static_cast<double>(kGazeDim)));

    // Persistent per-speaker gaze offsets: the identity confound.
    std::vector<Vec> speaker_offsets(config.n_speakers, Vec(kGazeDim, 0.0));
    for (int s = 0; s < config.n_speakers; ++s) {
        auto rng = derived_rng(config.seed, "synth-speaker", static_cast<std::uint64_t>(s));
        for (std::size_t d = 0; d < confound_dims; ++d)
            speaker_offsets[s][d] = normal01(rng) * kSpeakerOffsetScale;
    }

    SynthCorpus corpus;
    corpus.manifest.au_count = static_cast<std::size_t>(config.au_channels);
    corpus.manifest.keypoint_count = static_cast<std::size_t>(config.keypoints);

    int video_index = 0;
    for (int s = 0; s < config.n_speakers; ++s) {
        for (int v = 0; v < config.videos_per_speaker; ++v, ++video_index) {
            auto rng = derived_rng(config.seed, "synth-video", static_cast<std::uint64_t>(video_index));

            VideoCueTrack track;
            track.video_id = video_name(video_index);
            track.speaker_id = speaker_name(s);
            track.fps = config.fps;
            track.label = uniform01(rng) < config.deception_rate ? 1 : 0;

            std::vector<int> bursts;
            std::set<int> burst_frames;
            if (track.label == 1 && config.cue_burst_strength > 0.0) {
                const int lo = burst_len;
                const int hi = frame_count - 2 * burst_len;  // last start keeping the tail clear
                for (int b = 0; b < n_bursts; ++b) {
                    for (int attempt = 0; attempt < 64; ++attempt) {
                        const int start = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
                        bool overlaps = false;
                        for (int t = start; t < start + burst_len && !overlaps; ++t)
                            overlaps = burst_frames.count(t) > 0;
                        if (!overlaps) {
                            for (int t = start; t < start + burst_len; ++t) burst_frames.insert(t);
                            break;
                        }
                    }
                }
                bursts.assign(burst_frames.begin(), burst_frames.end());
            }

            Vec kp_base(2 * config.keypoints, 0.0);
            for (double& b : kp_base) b = uniform_in(rng, 0.3, 0.7);

            for (int t = 0; t < frame_count; ++t) {
                FrameCueRecord rec;
                rec.frame_index = t;
                const bool in_burst = burst_frames.count(t) > 0;
                rec.au.resize(config.au_channels);
                for (double& a : rec.au) {
                    a = 0.5 + normal01(rng) * config.noise_std;
                    if (in_burst) a += config.cue_burst_strength;
                    a = std::clamp(a, 0.0, 5.0);
                }
                rec.gaze.resize(kGazeDim);
                for (std::size_t d = 0; d < kGazeDim; ++d)
                    rec.gaze[d] = normal01(rng) * config.noise_std + speaker_offsets[s][d];
                for (int j = 0; j < config.keypoints; ++j)
                    rec.pose.emplace_back(clamp01(kp_base[2 * j] + normal01(rng) * config.noise_std * 0.05),
                                          clamp01(kp_base[2 * j + 1] + normal01(rng) * config.noise_std * 0.05));
                track.frames.push_back(std::move(rec));
            }

            corpus.burst_frames[track.video_id] = std::move(bursts);
            corpus.manifest.tracks.push_back(std::move(track));
        }
    }
    rebuild_speaker_index(corpus.manifest);
    return corpus;
}

double selection_hit_rate(const SegmentSelection& selection, const std::string& video_id,
                          const std::vector<int>& burst_frames) {
    if (selection.video_id != video_id)
        throw std::invalid_argument("selection_hit_rate: selection is for video '" +
                                    selection.video_id + "', ground truth for '" + video_id + "'");
    if (burst_frames.empty())
        throw std::invalid_argument("selection_hit_rate: video has no planted bursts");
    std::set<int> selected;
    for (const auto& seg : selection.segments) selected.insert(seg.begin(), seg.end());
    std::size_t hit = 0;
    for (int f : burst_frames) hit += selected.count(f);
    return static_cast<double>(hit) / static_cast<double>(burst_frames.size());
}

void save_burst_ground_truth(const SynthCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write ground truth: " + path.string());
    out << "genlie-bursts v1\n";
    for (const auto& track : corpus.manifest.tracks) {
        const auto& frames = corpus.burst_frames.at(track.video_id);
        out << track.video_id << ' ';
        if (frames.empty()) {
            out << "-";
        } else {
            for (std::size_t i = 0; i < frames.size(); ++i) out << (i ? "," : "") << frames[i];
        }
        out << "\n";
    }
}

std::map<std::string, std::vector<int>> load_burst_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground truth: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "genlie-bursts v1")
        throw std::runtime_error(path.string() + ": bad ground-truth header");
    std::map<std::string, std::vector<int>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.size() != 2) throw std::runtime_error(path.string() + ": malformed line");
        std::vector<int> frames;
        if (toks[1] != "-")
            for (auto t : split(toks[1], ','))
                frames.push_back(static_cast<int>(parse_int(t)));
        out[std::string(toks[0])] = std::move(frames);
    }
    return out;
}

}  // namespace genlie
