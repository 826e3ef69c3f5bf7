#include "genlie/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace genlie {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Uniform: return "uniform";
        case Strategy::AU: return "au";
        case Strategy::MicroExpression: return "micro-expression";
        case Strategy::Gaze: return "gaze";
        case Strategy::Posture: return "posture";
        case Strategy::Fusion: return "fusion";
    }
    throw std::logic_error("unreachable strategy");
}

Strategy strategy_from_name(const std::string& name) {
    for (Strategy s : {Strategy::Uniform, Strategy::AU, Strategy::MicroExpression, Strategy::Gaze,
                       Strategy::Posture, Strategy::Fusion})
        if (name == strategy_name(s)) return s;
    throw std::invalid_argument("unknown strategy '" + name +
                                "' (expected uniform|au|micro-expression|gaze|posture|fusion)");
}

std::vector<IndexRange> segment_ranges(int frame_count, int n_segments) {
    if (frame_count <= 0) throw std::invalid_argument("empty video: frame count must be >= 1");
    if (n_segments < 1) throw std::invalid_argument("segment count must be >= 1");
    const int base = frame_count / n_segments;
    const int remainder = frame_count % n_segments;
    std::vector<IndexRange> ranges;
    ranges.reserve(n_segments);
    int pos = 0;
    for (int i = 0; i < n_segments; ++i) {
        const int len = base + (i < remainder ? 1 : 0);
        ranges.push_back({pos, pos + len});
        pos += len;
    }
    return ranges;
}

Vec score_au(const VideoCueTrack& track) {
    Vec scores(track.frames.size(), 0.0);
    for (std::size_t t = 0; t < track.frames.size(); ++t)
        scores[t] = std::accumulate(track.frames[t].au.begin(), track.frames[t].au.end(), 0.0);
    return scores;
}

Vec score_micro_expression(const VideoCueTrack& track, double active_threshold,
                           double max_duration_seconds) {
    if (!(track.fps > 0.0)) throw std::invalid_argument("fps must be > 0");
    const std::size_t n_frames = track.frames.size();
    Vec scores(n_frames, 0.0);
    const std::size_t n_channels = track.au_count();
    // Per channel: maximal runs of intensity >= threshold; a run is transient
    // iff run_length / fps < max_duration.
    for (std::size_t c = 0; c < n_channels; ++c) {
        std::size_t t = 0;
        while (t < n_frames) {
            if (track.frames[t].au[c] < active_threshold) {
                ++t;
                continue;
            }
            std::size_t end = t;
            while (end < n_frames && track.frames[end].au[c] >= active_threshold) ++end;
            const double duration = static_cast<double>(end - t) / track.fps;
            if (duration < max_duration_seconds)
                for (std::size_t k = t; k < end; ++k) scores[k] += 1.0;
            t = end;
        }
    }
    return scores;
}

Vec score_gaze(const VideoCueTrack& track) {
    const std::size_t n_frames = track.frames.size();
    Vec mean(kGazeDim, 0.0);
    for (const auto& f : track.frames) axpy(1.0, f.gaze, mean);
    for (double& v : mean) v /= static_cast<double>(n_frames);
    Vec scores(n_frames, 0.0);
    for (std::size_t t = 0; t < n_frames; ++t)
        scores[t] = std::sqrt(squared_distance(track.frames[t].gaze, mean));
    return scores;
}

Vec score_posture(const VideoCueTrack& track) {
    const std::size_t n_frames = track.frames.size();
    Vec scores(n_frames, 0.0);
    for (std::size_t t = 1; t < n_frames; ++t) {
        const auto& prev = track.frames[t - 1].pose;
        const auto& cur = track.frames[t].pose;
        double total = 0.0;
        for (std::size_t j = 0; j < cur.size(); ++j) {
            const double dx = cur[j].first - prev[j].first;
            const double dy = cur[j].second - prev[j].second;
            total += std::sqrt(dx * dx + dy * dy);
        }
        scores[t] = total;
    }
    return scores;
}

namespace {

Vec min_max_normalize(const Vec& v) {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    Vec out(v.size(), 0.0);
    if (hi > lo)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / (hi - lo);
    return out;  // constant vectors map to zeros
}

}  // namespace

Vec fuse_scores(const Vec& au, const Vec& micro, const Vec& gaze, const Vec& posture) {
    const std::size_t n = au.size();
    if (micro.size() != n || gaze.size() != n || posture.size() != n)
        throw std::invalid_argument("fuse_scores: score vectors must share one length");
    const Vec a = min_max_normalize(au), m = min_max_normalize(micro),
              g = min_max_normalize(gaze), p = min_max_normalize(posture);
    Vec fused(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) fused[i] = (a[i] + m[i] + g[i] + p[i]) / 4.0;
    return fused;
}

std::vector<std::vector<int>> select_top_k(const Vec& scores,
                                           const std::vector<IndexRange>& ranges, int k) {
    std::vector<std::vector<int>> out;
    out.reserve(ranges.size());
    for (const auto& range : ranges) {
        std::vector<int> idx(range.length());
        std::iota(idx.begin(), idx.end(), range.begin);
        // Higher score first; ties go to the lower frame index.
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return scores[a] > scores[b]; });
        if (static_cast<int>(idx.size()) > k) idx.resize(k);
        std::sort(idx.begin(), idx.end());
        out.push_back(std::move(idx));
    }
    return out;
}

std::vector<int> select_uniform(const IndexRange& range, int k) {
    std::vector<int> out;
    const int len = range.length();
    if (len <= 0) return out;
    if (k == 1) {
        out.push_back(range.begin + (len - 1) / 2);
        return out;
    }
    for (int j = 0; j < k; ++j) {
        const int offset = static_cast<int>(
            std::llround(static_cast<double>(j) * (len - 1) / static_cast<double>(k - 1)));
        const int idx = range.begin + offset;
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

SegmentSelection preprocess(const VideoCueTrack& track, const PreprocessConfig& config) {
    const int frame_count = static_cast<int>(track.frames.size());
    if (frame_count == 0) throw std::invalid_argument("empty video");

    SegmentSelection sel;
    sel.video_id = track.video_id;
    sel.strategy = config.strategy;

    Vec scores(frame_count, 0.0);
    switch (config.strategy) {
        case Strategy::Uniform:
            break;  // score-free
        case Strategy::AU:
            scores = score_au(track);
            break;
        case Strategy::MicroExpression:
            scores = score_micro_expression(track, config.au_active_threshold,
                                            config.micro_expression_max_duration);
            break;
        case Strategy::Gaze:
            scores = score_gaze(track);
            break;
        case Strategy::Posture:
            scores = score_posture(track);
            break;
        case Strategy::Fusion:
            scores = fuse_scores(score_au(track),
                                 score_micro_expression(track, config.au_active_threshold,
                                                        config.micro_expression_max_duration),
                                 score_gaze(track), score_posture(track));
            break;
    }
    sel.scores = scores;

    const auto ranges = segment_ranges(frame_count, config.n_segments);

    if (frame_count < config.frame_budget()) {
        // Short video: keep every frame, segments still formed.
        for (const auto& r : ranges) {
            std::vector<int> all(r.length());
            std::iota(all.begin(), all.end(), r.begin);
            sel.segments.push_back(std::move(all));
        }
        return sel;
    }

    if (config.strategy == Strategy::Uniform) {
        for (const auto& r : ranges)
            sel.segments.push_back(select_uniform(r, config.frames_per_segment));
    } else {
        sel.segments = select_top_k(scores, ranges, config.frames_per_segment);
    }
    return sel;
}

}  // namespace genlie
