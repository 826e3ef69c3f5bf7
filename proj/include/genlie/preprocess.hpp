#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genlie/cue.hpp"

namespace genlie {

enum class Strategy { Uniform, AU, MicroExpression, Gaze, Posture, Fusion };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct PreprocessConfig {
    int n_segments = 8;
    int frames_per_segment = 16;
    Strategy strategy = Strategy::Uniform;
    double au_active_threshold = 1.0;           // on the 0-5 AU scale
    double micro_expression_max_duration = 0.5;  // seconds

    int frame_budget() const { return n_segments * frames_per_segment; }
};

struct IndexRange {
    int begin = 0;
    int end = 0;  // half-open
    int length() const { return end - begin; }
    bool empty() const { return begin >= end; }
};

struct SegmentSelection {
    std::string video_id;
    Strategy strategy = Strategy::Uniform;
    std::vector<std::vector<int>> segments;  // per segment, sorted ascending frame indices
    Vec scores;                              // per-frame scores, length T (audit trail)

    std::size_t total_selected() const {
        std::size_t n = 0;
        for (const auto& s : segments) n += s.size();
        return n;
    }
};

// Partition [0, T) into N near-equal ranges; the remainder goes to the
// earliest segments so segmentation is a pure function of (T, N).
std::vector<IndexRange> segment_ranges(int frame_count, int n_segments);

Vec score_au(const VideoCueTrack& track);
Vec score_micro_expression(const VideoCueTrack& track, double active_threshold,
                           double max_duration_seconds);
Vec score_gaze(const VideoCueTrack& track);
Vec score_posture(const VideoCueTrack& track);

// Min-max normalize each cue over the video (constant vectors map to zeros),
// then average the four with equal weights.
Vec fuse_scores(const Vec& au, const Vec& micro, const Vec& gaze, const Vec& posture);

// Top-K per segment by score, ties broken toward the lower frame index;
// output re-sorted in temporal order.
std::vector<std::vector<int>> select_top_k(const Vec& scores,
                                           const std::vector<IndexRange>& ranges, int k);

std::vector<int> select_uniform(const IndexRange& range, int k);

SegmentSelection preprocess(const VideoCueTrack& track, const PreprocessConfig& config);

}  // namespace genlie
