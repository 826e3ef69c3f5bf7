#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "genlie/cue.hpp"
#include "genlie/linalg.hpp"
#include "genlie/preprocess.hpp"

namespace genlie {

// Offline-extracted segment features keyed by (video_id, segment_index).
// Read-only after load; stands in for the frozen video encoder.
class FeatureBank {
  public:
    FeatureBank() = default;
    FeatureBank(std::size_t feature_dim, std::map<std::pair<std::string, std::uint32_t>, Vec> entries)
        : feature_dim_(feature_dim), entries_(std::move(entries)) {}

    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t entry_count() const { return entries_.size(); }

    const Vec& lookup(const std::string& video_id, std::uint32_t segment_index) const;

    void insert(const std::string& video_id, std::uint32_t segment_index, Vec feature);

    // Binary format: magic "GLF1", u32 D, u32 entry_count, then entries of
    // {u16 video_id_len, video_id bytes, u32 segment_index, D little-endian
    // 32-bit floats}. All integers little-endian.
    static FeatureBank load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

  private:
    std::size_t feature_dim_ = 0;
    std::map<std::pair<std::string, std::uint32_t>, Vec> entries_;
};

// Deterministic test double for the frozen segment encoder: per-channel mean
// and standard deviation over the selected frames, pushed through a fixed
// seeded random projection. Pure function of (frames, seed, D).
class SyntheticEncoder {
  public:
    SyntheticEncoder(std::uint64_t seed, std::size_t feature_dim)
        : seed_(seed), feature_dim_(feature_dim) {}

    std::size_t feature_dim() const { return feature_dim_; }

    Vec encode(const std::vector<const FrameCueRecord*>& selected_frames) const;
    Vec encode(const VideoCueTrack& track, const std::vector<int>& frame_indices) const;

  private:
    const Mat& projection(std::size_t input_dim) const;

    std::uint64_t seed_;
    std::size_t feature_dim_;
    mutable std::map<std::size_t, Mat> projection_cache_;  // keyed by input dim
};

// Segment features for one video: bank lookups or synthetic encodes,
// one row per segment.
std::vector<Vec> encode_segments(const FeatureBank& bank, const std::string& video_id,
                                 std::size_t n_segments);
std::vector<Vec> encode_segments(const SyntheticEncoder& enc, const VideoCueTrack& track,
                                 const SegmentSelection& selection);

}  // namespace genlie
