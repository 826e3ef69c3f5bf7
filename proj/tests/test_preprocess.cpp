#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "genlie/preprocess.hpp"
#include "genlie/rng.hpp"

using namespace genlie;

namespace {

// Track with the given per-frame AU rows; gaze and pose default to constants.
VideoCueTrack track_from_au(const std::vector<Vec>& au_rows, double fps = 30.0) {
    VideoCueTrack t;
    t.video_id = "v";
    t.speaker_id = "s";
    t.fps = fps;
    for (std::size_t f = 0; f < au_rows.size(); ++f) {
        FrameCueRecord rec;
        rec.frame_index = static_cast<int>(f);
        rec.au = au_rows[f];
        rec.gaze = Vec(kGazeDim, 0.0);
        rec.pose = {{0.5, 0.5}};
        t.frames.push_back(std::move(rec));
    }
    return t;
}

VideoCueTrack random_track(std::uint64_t seed, int frames) {
    auto rng = derived_rng(seed, "preprocess-fixture");
    std::vector<Vec> au(frames);
    for (auto& row : au)
        for (int c = 0; c < 3; ++c) row.push_back(uniform_in(rng, 0.0, 5.0));
    VideoCueTrack t = track_from_au(au);
    for (auto& f : t.frames) {
        for (double& g : f.gaze) g = normal01(rng);
        f.pose = {{uniform01(rng), uniform01(rng)}, {uniform01(rng), uniform01(rng)}};
    }
    return t;
}

}  // namespace

TEST_CASE("segment_ranges partitions with remainder-first rule") {
    SUBCASE("128 into 8 equal segments") {
        const auto r = segment_ranges(128, 8);
        REQUIRE(r.size() == 8);
        for (int i = 0; i < 8; ++i) {
            CHECK(r[i].begin == i * 16);
            CHECK(r[i].length() == 16);
        }
    }
    SUBCASE("10 into 3") {
        const auto r = segment_ranges(10, 3);
        REQUIRE(r.size() == 3);
        CHECK(r[0].begin == 0); CHECK(r[0].end == 4);
        CHECK(r[1].begin == 4); CHECK(r[1].end == 7);
        CHECK(r[2].begin == 7); CHECK(r[2].end == 10);
    }
    SUBCASE("2 into 3 leaves the last segment empty") {
        const auto r = segment_ranges(2, 3);
        REQUIRE(r.size() == 3);
        CHECK(r[0].begin == 0); CHECK(r[0].end == 1);
        CHECK(r[1].begin == 1); CHECK(r[1].end == 2);
        CHECK(r[2].empty());
    }
    SUBCASE("rejects empty input") {
        CHECK_THROWS_AS(segment_ranges(0, 4), std::invalid_argument);
        CHECK_THROWS_AS(segment_ranges(4, 0), std::invalid_argument);
    }
}

TEST_CASE("AU score is the per-frame intensity sum") {
    CHECK(score_au(track_from_au({{0.5, 1.5}})) == Vec{2.0});
    CHECK(score_au(track_from_au({{0, 0}, {0, 0}})) == Vec{0.0, 0.0});

    const VideoCueTrack t = track_from_au({{1, 0}, {0, 3}});
    const Vec s = score_au(t);
    CHECK(s == Vec{1.0, 3.0});
    const auto picked = select_top_k(s, {{0, 2}}, 1);
    CHECK(picked == std::vector<std::vector<int>>{{1}});
}

TEST_CASE("micro-expression score counts transient activation episodes") {
    // One channel active for frames 10-11 at 30 fps: 2/30 s < 0.5 s.
    std::vector<Vec> au(30, Vec{0.0});
    au[10][0] = 1.2;
    au[11][0] = 1.0;
    const Vec s = score_micro_expression(track_from_au(au), 1.0, 0.5);
    for (int f = 0; f < 30; ++f) CHECK(s[f] == ((f == 10 || f == 11) ? 1.0 : 0.0));

    // A 20-frame run at 30 fps lasts 0.667 s: not transient.
    std::vector<Vec> au_long(30, Vec{0.0});
    for (int f = 5; f < 25; ++f) au_long[f][0] = 2.0;
    const Vec s_long = score_micro_expression(track_from_au(au_long), 1.0, 0.5);
    for (double v : s_long) CHECK(v == 0.0);

    // Nothing ever crosses the threshold.
    const Vec s_quiet = score_micro_expression(track_from_au(std::vector<Vec>(8, Vec{0.5})), 1.0, 0.5);
    for (double v : s_quiet) CHECK(v == 0.0);
}

TEST_CASE("gaze score is distance to the per-video mean descriptor") {
    // Constant descriptors: zero everywhere.
    VideoCueTrack t = track_from_au(std::vector<Vec>(4, Vec{0.0}));
    for (auto& f : t.frames) f.gaze = Vec(kGazeDim, 0.7);
    for (double v : score_gaze(t)) CHECK(v == 0.0);

    // Two frames: each sits ||g0 - g1|| / 2 from the mean.
    VideoCueTrack two = track_from_au(std::vector<Vec>(2, Vec{0.0}));
    two.frames[0].gaze[0] = 1.0;
    two.frames[1].gaze[0] = 4.0;
    two.frames[1].gaze[1] = 4.0;
    const double dist = std::sqrt(3.0 * 3.0 + 4.0 * 4.0);  // 5
    const Vec s2 = score_gaze(two);
    CHECK(s2[0] == doctest::Approx(dist / 2.0).epsilon(1e-12));
    CHECK(s2[1] == doctest::Approx(dist / 2.0).epsilon(1e-12));

    // Three frames against a brute-force oracle.
    VideoCueTrack three = random_track(7, 3);
    Vec mean(kGazeDim, 0.0);
    for (const auto& f : three.frames)
        for (std::size_t i = 0; i < kGazeDim; ++i) mean[i] += f.gaze[i] / 3.0;
    const Vec s3 = score_gaze(three);
    for (int f = 0; f < 3; ++f) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < kGazeDim; ++i) {
            const double d = three.frames[f].gaze[i] - mean[i];
            d2 += d * d;
        }
        CHECK(s3[f] == doctest::Approx(std::sqrt(d2)).epsilon(1e-12));
    }
}

TEST_CASE("posture score sums keypoint displacement from the previous frame") {
    VideoCueTrack still = track_from_au(std::vector<Vec>(5, Vec{0.0}));
    for (double v : score_posture(still)) CHECK(v == 0.0);

    VideoCueTrack moving = track_from_au(std::vector<Vec>(2, Vec{0.0}));
    moving.frames[0].pose = {{0.0, 0.0}};
    moving.frames[1].pose = {{0.3, 0.4}};
    const Vec s = score_posture(moving);
    CHECK(s[0] == 0.0);  // first frame has no predecessor
    CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-12));

    VideoCueTrack single = track_from_au({Vec{0.0}});
    CHECK(score_posture(single) == Vec{0.0});
}

TEST_CASE("fusion min-max normalizes each cue then averages") {
    CHECK(fuse_scores({1, 1}, {2, 2}, {3, 3}, {4, 4}) == Vec{0.0, 0.0});
    CHECK(fuse_scores({0, 2}, {0, 0}, {0, 0}, {0, 0}) == Vec{0.0, 0.25});

    auto rng = derived_rng(11, "fusion-fixture");
    std::vector<Vec> cues(4, Vec(5, 0.0));
    for (auto& c : cues)
        for (double& v : c) v = normal01(rng);
    const Vec fused = fuse_scores(cues[0], cues[1], cues[2], cues[3]);
    for (int f = 0; f < 5; ++f) {
        double expect = 0.0;
        for (const auto& c : cues) {
            const double lo = *std::min_element(c.begin(), c.end());
            const double hi = *std::max_element(c.begin(), c.end());
            expect += (hi > lo ? (c[f] - lo) / (hi - lo) : 0.0) / 4.0;
        }
        CHECK(fused[f] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("top-k selection with lower-index tie-break, temporally re-sorted") {
    CHECK(select_top_k({3, 1, 2}, {{0, 3}}, 2) == std::vector<std::vector<int>>{{0, 2}});
    CHECK(select_top_k({5, 5, 5, 5}, {{0, 4}}, 2) == std::vector<std::vector<int>>{{0, 1}});
    CHECK(select_top_k({1, 2, 3}, {{0, 3}}, 5) == std::vector<std::vector<int>>{{0, 1, 2}});
}

TEST_CASE("uniform selection offsets") {
    CHECK(select_uniform({0, 16}, 4) == std::vector<int>{0, 5, 10, 15});
    CHECK(select_uniform({0, 16}, 1) == std::vector<int>{7});
    CHECK(select_uniform({0, 3}, 5) == std::vector<int>{0, 1, 2});
    CHECK(select_uniform({4, 20}, 4) == std::vector<int>{4, 9, 14, 19});  // offset range
}

TEST_CASE("preprocess keeps every frame of short videos") {
    const VideoCueTrack t = random_track(3, 64);
    PreprocessConfig cfg;  // N=8, K=16 -> budget 128
    for (Strategy s : {Strategy::Uniform, Strategy::AU, Strategy::MicroExpression, Strategy::Gaze,
                       Strategy::Posture, Strategy::Fusion}) {
        cfg.strategy = s;
        const SegmentSelection sel = preprocess(t, cfg);
        CHECK(sel.total_selected() == 64);
        std::set<int> all;
        for (const auto& seg : sel.segments) all.insert(seg.begin(), seg.end());
        CHECK(all.size() == 64);
        CHECK(*all.begin() == 0);
        CHECK(*all.rbegin() == 63);
    }
}

TEST_CASE("preprocess respects the 128-frame budget") {
    PreprocessConfig cfg;
    const SegmentSelection long_sel = preprocess(random_track(4, 256), cfg);
    CHECK(long_sel.total_selected() == 128);

    cfg.strategy = Strategy::Uniform;
    const SegmentSelection exact = preprocess(random_track(5, 128), cfg);
    CHECK(exact.total_selected() == 128);
    std::set<int> all;
    for (const auto& seg : exact.segments) all.insert(seg.begin(), seg.end());
    CHECK(all.size() == 128);  // budget equals length: the full index set
}

TEST_CASE("budget invariants hold over random (T, N, K) fixtures") {
    auto rng = derived_rng(99, "budget-fixtures");
    const std::vector<std::pair<int, int>> splits = {{1, 128}, {2, 64},  {4, 32},  {8, 16},
                                                     {16, 8},  {32, 4},  {64, 2},  {128, 1}};
    for (int i = 0; i < 50; ++i) {
        const auto [n, k] = splits[rng() % splits.size()];
        const int frames = 1 + static_cast<int>(rng() % 600);
        const VideoCueTrack t = random_track(1000 + i, frames);
        PreprocessConfig cfg;
        cfg.n_segments = n;
        cfg.frames_per_segment = k;
        cfg.strategy = static_cast<Strategy>(rng() % 6);
        const SegmentSelection sel = preprocess(t, cfg);
        CHECK(sel.total_selected() == static_cast<std::size_t>(std::min(frames, 128)));
        const auto ranges = segment_ranges(frames, n);
        REQUIRE(sel.segments.size() == static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s)
            CHECK(sel.segments[s].size() ==
                  static_cast<std::size_t>(std::min(k, ranges[s].length())));
    }
}

TEST_CASE("uniform selection is deterministic") {
    const VideoCueTrack t = random_track(6, 300);
    PreprocessConfig cfg;
    cfg.strategy = Strategy::Uniform;
    const SegmentSelection a = preprocess(t, cfg);
    const SegmentSelection b = preprocess(t, cfg);
    const SegmentSelection c = preprocess(t, cfg);
    CHECK(a.segments == b.segments);
    CHECK(b.segments == c.segments);
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::Uniform, Strategy::AU, Strategy::MicroExpression, Strategy::Gaze,
                       Strategy::Posture, Strategy::Fusion})
        CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK_THROWS_AS(strategy_from_name("bogus"), std::invalid_argument);
}
