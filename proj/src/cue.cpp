#include "genlie/cue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "genlie/text.hpp"

namespace genlie {

namespace {

constexpr std::string_view kTrackMagic = "genlie-cue v1";
constexpr std::string_view kManifestMagic = "genlie-manifest v1";

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& msg) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + msg);
}

Vec parse_decimal_list(std::string_view field, const std::string& source, std::size_t line_no,
                       const char* name) {
    Vec out;
    for (auto tok : split(field, ',')) {
        if (tok.empty()) fail(source, line_no, std::string("empty value in ") + name);
        try {
            out.push_back(parse_double(tok));
        } catch (const std::exception& e) {
            fail(source, line_no, std::string(name) + ": " + e.what());
        }
    }
    return out;
}

std::map<std::string, std::string> parse_kv_pairs(const std::vector<std::string_view>& toks,
                                                  std::size_t from, const std::string& source,
                                                  std::size_t line_no) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = from; i < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string_view::npos) fail(source, line_no, "expected key=value, got '" + std::string(toks[i]) + "'");
        kv.emplace(std::string(toks[i].substr(0, eq)), std::string(toks[i].substr(eq + 1)));
    }
    return kv;
}

std::string require(const std::map<std::string, std::string>& kv, const char* key,
                    const std::string& source, std::size_t line_no) {
    auto it = kv.find(key);
    if (it == kv.end()) fail(source, line_no, std::string("missing header field '") + key + "'");
    return it->second;
}

}  // namespace

const VideoCueTrack& CorpusManifest::track_by_id(const std::string& video_id) const {
    for (const auto& t : tracks)
        if (t.video_id == video_id) return t;
    throw std::runtime_error("unknown video_id '" + video_id + "'");
}

VideoCueTrack parse_cue_track(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source + ": empty input");

    auto header_toks = split_ws(line);
    if (header_toks.size() < 2 || header_toks[0] != "genlie-cue" || header_toks[1] != "v1")
        fail(source, 1, "bad header, expected '" + std::string(kTrackMagic) + " ...'");
    auto kv = parse_kv_pairs(header_toks, 2, source, 1);

    VideoCueTrack track;
    track.video_id = require(kv, "video_id", source, 1);
    track.speaker_id = require(kv, "speaker_id", source, 1);
    track.label = static_cast<int>(parse_int(require(kv, "label", source, 1)));
    track.fps = parse_double(require(kv, "fps", source, 1));
    const auto au_count = parse_int(require(kv, "A", source, 1));
    const auto kp_count = parse_int(require(kv, "J", source, 1));

    if (track.label != 0 && track.label != 1) fail(source, 1, "label must be 0 or 1");
    if (!(track.fps > 0.0)) fail(source, 1, "fps must be > 0");
    if (au_count < 1) fail(source, 1, "A must be >= 1");
    if (kp_count < 1) fail(source, 1, "J must be >= 1");

    std::size_t line_no = 1;
    int expected_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.size() != 4)
            fail(source, line_no, "expected 4 fields (frame_index au gaze pose), got " +
                                      std::to_string(toks.size()));

        FrameCueRecord rec;
        rec.frame_index = static_cast<int>(parse_int(toks[0]));
        if (rec.frame_index != expected_index)
            fail(source, line_no,
                 "frame_index must be contiguous from 0: expected " +
                     std::to_string(expected_index) + ", got " + std::to_string(rec.frame_index));
        ++expected_index;

        rec.au = parse_decimal_list(toks[1], source, line_no, "au");
        rec.gaze = parse_decimal_list(toks[2], source, line_no, "gaze");
        const Vec pose_flat = parse_decimal_list(toks[3], source, line_no, "pose");

        if (rec.au.size() != static_cast<std::size_t>(au_count))
            fail(source, line_no, "au: expected length " + std::to_string(au_count) + ", got " +
                                      std::to_string(rec.au.size()));
        if (rec.gaze.size() != kGazeDim)
            fail(source, line_no, "gaze: expected length " + std::to_string(kGazeDim) + ", got " +
                                      std::to_string(rec.gaze.size()));
        if (pose_flat.size() != static_cast<std::size_t>(2 * kp_count))
            fail(source, line_no, "pose: expected " + std::to_string(2 * kp_count) +
                                      " coordinates, got " + std::to_string(pose_flat.size()));

        for (double v : rec.au)
            if (!std::isfinite(v) || v < 0.0 || v > 5.0)
                fail(source, line_no, "au intensity out of [0,5]: " + fmt_double(v));
        for (double v : rec.gaze)
            if (!std::isfinite(v)) fail(source, line_no, "non-finite gaze value");
        for (std::size_t j = 0; j + 1 < pose_flat.size(); j += 2) {
            const double x = pose_flat[j], y = pose_flat[j + 1];
            if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
                fail(source, line_no, "pose coordinate out of [0,1]");
            rec.pose.emplace_back(x, y);
        }
        track.frames.push_back(std::move(rec));
    }

    if (track.frames.empty()) throw ParseError(source + ": track has no frames");
    return track;
}

void serialize_cue_track(const VideoCueTrack& track, std::ostream& out) {
    out << kTrackMagic << " video_id=" << track.video_id << " speaker_id=" << track.speaker_id
        << " label=" << track.label << " fps=" << fmt_double(track.fps)
        << " A=" << track.au_count() << " J=" << track.keypoint_count() << "\n";
    for (const auto& rec : track.frames) {
        out << rec.frame_index << ' ';
        for (std::size_t i = 0; i < rec.au.size(); ++i)
            out << (i ? "," : "") << fmt_double(rec.au[i]);
        out << ' ';
        for (std::size_t i = 0; i < rec.gaze.size(); ++i)
            out << (i ? "," : "") << fmt_double(rec.gaze[i]);
        out << ' ';
        for (std::size_t i = 0; i < rec.pose.size(); ++i)
            out << (i ? "," : "") << fmt_double(rec.pose[i].first) << ','
                << fmt_double(rec.pose[i].second);
        out << "\n";
    }
}

VideoCueTrack load_cue_track(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cue track: " + path.string());
    return parse_cue_track(in, path.string());
}

void save_cue_track(const VideoCueTrack& track, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cue track: " + path.string());
    serialize_cue_track(track, out);
}

void rebuild_speaker_index(CorpusManifest& manifest) {
    std::set<std::string> speakers;
    for (const auto& t : manifest.tracks) speakers.insert(t.speaker_id);
    manifest.speaker_index.clear();
    int next = 0;
    for (const auto& s : speakers) manifest.speaker_index[s] = next++;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest: " + path.string());
    const auto base_dir = path.parent_path();

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty manifest");
    ++line_no;
    if (line != kManifestMagic)
        fail(path.string(), line_no, "bad header, expected '" + std::string(kManifestMagic) + "'");

    CorpusManifest manifest;
    bool have_a = false, have_j = false;
    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_ws(line);
        if (toks[0] == "au_count") {
            if (toks.size() != 2) fail(path.string(), line_no, "au_count expects one value");
            manifest.au_count = static_cast<std::size_t>(parse_int(toks[1]));
            have_a = true;
        } else if (toks[0] == "keypoint_count") {
            if (toks.size() != 2) fail(path.string(), line_no, "keypoint_count expects one value");
            manifest.keypoint_count = static_cast<std::size_t>(parse_int(toks[1]));
            have_j = true;
        } else if (toks[0] == "video") {
            if (toks.size() != 3) fail(path.string(), line_no, "video expects: video <id> <path>");
            const std::string id(toks[1]);
            if (!seen_ids.insert(id).second)
                fail(path.string(), line_no, "duplicate video_id '" + id + "'");
            std::filesystem::path track_path{std::string(toks[2])};
            if (track_path.is_relative()) track_path = base_dir / track_path;
            VideoCueTrack track;
            try {
                track = load_cue_track(track_path);
            } catch (const std::exception& e) {
                fail(path.string(), line_no,
                     "unreadable track '" + track_path.string() + "': " + e.what());
            }
            if (track.video_id != id)
                fail(path.string(), line_no, "track header video_id '" + track.video_id +
                                                 "' does not match manifest id '" + id + "'");
            manifest.tracks.push_back(std::move(track));
        } else {
            fail(path.string(), line_no, "unknown directive '" + std::string(toks[0]) + "'");
        }
    }
    if (!have_a || !have_j)
        throw ParseError(path.string() + ": manifest must declare au_count and keypoint_count");
    if (manifest.tracks.empty()) throw ParseError(path.string() + ": manifest lists no videos");

    for (const auto& t : manifest.tracks) {
        if (t.au_count() != manifest.au_count)
            throw ParseError(path.string() + ": track '" + t.video_id + "' has A=" +
                             std::to_string(t.au_count()) + ", manifest declares " +
                             std::to_string(manifest.au_count));
        if (t.keypoint_count() != manifest.keypoint_count)
            throw ParseError(path.string() + ": track '" + t.video_id + "' has J=" +
                             std::to_string(t.keypoint_count()) + ", manifest declares " +
                             std::to_string(manifest.keypoint_count));
    }

    rebuild_speaker_index(manifest);
    return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& track_dir) {
    std::filesystem::create_directories(track_dir);
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
    out << kManifestMagic << "\n";
    out << "au_count " << manifest.au_count << "\n";
    out << "keypoint_count " << manifest.keypoint_count << "\n";
    const auto base_dir = manifest_path.parent_path();
    for (const auto& t : manifest.tracks) {
        const auto track_path = track_dir / (t.video_id + ".cue");
        save_cue_track(t, track_path);
        out << "video " << t.video_id << " "
            << std::filesystem::relative(track_path, base_dir).generic_string() << "\n";
    }
}

}  // namespace genlie
