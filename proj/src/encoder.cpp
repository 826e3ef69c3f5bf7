#include "genlie/encoder.hpp"

#include <cmath>
#include <fstream>

#include "genlie/binio.hpp"
#include "genlie/rng.hpp"

namespace genlie {

const Vec& FeatureBank::lookup(const std::string& video_id, std::uint32_t segment_index) const {
    auto it = entries_.find({video_id, segment_index});
    if (it == entries_.end())
        throw std::runtime_error("feature bank has no entry for (" + video_id + ", segment " +
                                 std::to_string(segment_index) + ")");
    return it->second;
}

void FeatureBank::insert(const std::string& video_id, std::uint32_t segment_index, Vec feature) {
    if (feature_dim_ == 0) feature_dim_ = feature.size();
    if (feature.size() != feature_dim_)
        throw std::runtime_error("feature bank dimension mismatch on insert");
    entries_[{video_id, segment_index}] = std::move(feature);
}

FeatureBank FeatureBank::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature bank: " + path.string());
    binio::expect_magic(in, "GLF1", path.string());
    const std::uint32_t dim = binio::read_u32(in, "feature dim");
    const std::uint32_t count = binio::read_u32(in, "entry count");
    FeatureBank bank;
    bank.feature_dim_ = dim;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t id_len = binio::read_u16(in, "video_id length");
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        if (!in) throw std::runtime_error(path.string() + ": truncated video_id");
        const std::uint32_t segment = binio::read_u32(in, "segment index");
        Vec feature(dim);
        for (std::uint32_t d = 0; d < dim; ++d)
            feature[d] = static_cast<double>(binio::read_f32(in, "feature value"));
        bank.entries_[{std::move(id), segment}] = std::move(feature);
    }
    return bank;
}

void FeatureBank::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write feature bank: " + path.string());
    binio::write_magic(out, "GLF1");
    binio::write_u32(out, static_cast<std::uint32_t>(feature_dim_));
    binio::write_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [key, feature] : entries_) {
        binio::write_u16(out, static_cast<std::uint16_t>(key.first.size()));
        out.write(key.first.data(), static_cast<std::streamsize>(key.first.size()));
        binio::write_u32(out, key.second);
        for (double v : feature) binio::write_f32(out, static_cast<float>(v));
    }
}

const Mat& SyntheticEncoder::projection(std::size_t input_dim) const {
    auto it = projection_cache_.find(input_dim);
    if (it != projection_cache_.end()) return it->second;
    // Materialized once from the seed; regeneration is bit-identical.
    auto rng = derived_rng(seed_, "synthetic-encoder-projection", input_dim);
    Mat p(feature_dim_, input_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (double& v : p.data) v = normal01(rng) * scale;
    return projection_cache_.emplace(input_dim, std::move(p)).first->second;
}

Vec SyntheticEncoder::encode(const std::vector<const FrameCueRecord*>& frames) const {
    if (frames.empty()) throw std::invalid_argument("synthetic encoder: empty frame selection");
    const std::size_t a = frames.front()->au.size();
    const std::size_t g = frames.front()->gaze.size();
    const std::size_t j = frames.front()->pose.size();
    const std::size_t channels = a + g + 2 * j;
    const double n = static_cast<double>(frames.size());

    Vec mean(channels, 0.0), sq(channels, 0.0);
    for (const FrameCueRecord* f : frames) {
        std::size_t c = 0;
        auto accumulate = [&](double v) {
            mean[c] += v;
            sq[c] += v * v;
            ++c;
        };
        for (double v : f->au) accumulate(v);
        for (double v : f->gaze) accumulate(v);
        for (auto [x, y] : f->pose) {
            accumulate(x);
            accumulate(y);
        }
    }
    Vec summary(2 * channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        mean[c] /= n;
        const double var = std::max(0.0, sq[c] / n - mean[c] * mean[c]);
        summary[c] = mean[c];
        summary[channels + c] = std::sqrt(var);
    }
    return matvec(projection(summary.size()), summary);
}

Vec SyntheticEncoder::encode(const VideoCueTrack& track, const std::vector<int>& frame_indices) const {
    std::vector<const FrameCueRecord*> frames;
    frames.reserve(frame_indices.size());
    for (int idx : frame_indices) {
        if (idx < 0 || idx >= static_cast<int>(track.frames.size()))
            throw std::out_of_range("frame index out of range for track " + track.video_id);
        frames.push_back(&track.frames[idx]);
    }
    return encode(frames);
}

std::vector<Vec> encode_segments(const FeatureBank& bank, const std::string& video_id,
                                 std::size_t n_segments) {
    std::vector<Vec> out;
    out.reserve(n_segments);
    for (std::size_t i = 0; i < n_segments; ++i)
        out.push_back(bank.lookup(video_id, static_cast<std::uint32_t>(i)));
    return out;
}

std::vector<Vec> encode_segments(const SyntheticEncoder& enc, const VideoCueTrack& track,
                                 const SegmentSelection& selection) {
    std::vector<Vec> out;
    out.reserve(selection.segments.size());
    for (const auto& seg : selection.segments) {
        if (seg.empty()) continue;  // degenerate short-video segment
        out.push_back(enc.encode(track, seg));
    }
    return out;
}

}  // namespace genlie
