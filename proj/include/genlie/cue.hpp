#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genlie/linalg.hpp"

namespace genlie {

constexpr std::size_t kGazeDim = 36;

struct FrameCueRecord {
    int frame_index = 0;
    Vec au;                                        // length A, values in [0, 5]
    Vec gaze;                                      // length kGazeDim
    std::vector<std::pair<double, double>> pose;   // J keypoints, coords in [0, 1]
};

struct VideoCueTrack {
    std::string video_id;
    std::string speaker_id;
    int label = 0;  // 0 truthful, 1 deceptive
    double fps = 0.0;
    std::vector<FrameCueRecord> frames;

    std::size_t au_count() const { return frames.empty() ? 0 : frames.front().au.size(); }
    std::size_t keypoint_count() const { return frames.empty() ? 0 : frames.front().pose.size(); }
};

struct CorpusManifest {
    std::vector<VideoCueTrack> tracks;
    std::map<std::string, int> speaker_index;  // speaker_id -> class in [0, C)
    std::size_t au_count = 0;
    std::size_t keypoint_count = 0;

    int speaker_class_count() const { return static_cast<int>(speaker_index.size()); }
    const VideoCueTrack& track_by_id(const std::string& video_id) const;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Line-delimited cue-track format: one header line, then one frame per line.
VideoCueTrack parse_cue_track(std::istream& in, const std::string& source_name = "<stream>");
void serialize_cue_track(const VideoCueTrack& track, std::ostream& out);

VideoCueTrack load_cue_track(const std::filesystem::path& path);
void save_cue_track(const VideoCueTrack& track, const std::filesystem::path& path);

// Speaker classes are assigned by lexicographic sort of speaker_id, never by
// file order, so the index is invariant under manifest reordering.
void rebuild_speaker_index(CorpusManifest& manifest);

CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& track_dir);

}  // namespace genlie
