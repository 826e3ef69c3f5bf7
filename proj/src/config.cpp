#include "genlie/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "genlie/text.hpp"

namespace genlie {

const char* encoder_kind_name(EncoderKind k) {
    return k == EncoderKind::Synthetic ? "synthetic" : "bank";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
    if (name == "synthetic") return EncoderKind::Synthetic;
    if (name == "bank") return EncoderKind::Bank;
    throw std::invalid_argument("unknown encoder '" + name + "' (expected synthetic|bank)");
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected true/false, got '" + v + "'");
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& t = cfg.train;
    auto& s = cfg.synth;
    if (key == "learning_rate") t.learning_rate = parse_double(value);
    else if (key == "weight_decay") t.weight_decay = parse_double(value);
    else if (key == "batch_size") t.batch_size = static_cast<int>(parse_int(value));
    else if (key == "epochs") t.epochs = static_cast<int>(parse_int(value));
    else if (key == "seed") { t.seed = static_cast<std::uint64_t>(parse_int(value)); s.seed = t.seed; }
    else if (key == "adam_beta1") t.adam_beta1 = parse_double(value);
    else if (key == "adam_beta2") t.adam_beta2 = parse_double(value);
    else if (key == "adam_epsilon") t.adam_epsilon = parse_double(value);
    else if (key == "alpha") t.loss_weights.alpha = parse_double(value);
    else if (key == "beta") t.loss_weights.beta = parse_double(value);
    else if (key == "lambda") t.loss_weights.lambda = parse_double(value);
    else if (key == "margin") t.loss_weights.margin = parse_double(value);
    else if (key == "n_segments") t.preprocess.n_segments = static_cast<int>(parse_int(value));
    else if (key == "frames_per_segment") t.preprocess.frames_per_segment = static_cast<int>(parse_int(value));
    else if (key == "strategy") t.preprocess.strategy = strategy_from_name(value);
    else if (key == "au_active_threshold") t.preprocess.au_active_threshold = parse_double(value);
    else if (key == "micro_expression_max_duration") t.preprocess.micro_expression_max_duration = parse_double(value);
    else if (key == "use_temporal_segmentation") t.ablation.use_temporal_segmentation = parse_bool(value);
    else if (key == "use_reembedding") t.ablation.use_reembedding = parse_bool(value);
    else if (key == "use_id_loss") t.ablation.use_id_loss = parse_bool(value);
    else if (key == "use_triplet_loss") t.ablation.use_triplet_loss = parse_bool(value);
    else if (key == "hidden_dim") t.hidden_dim = static_cast<std::size_t>(parse_int(value));
    else if (key == "out_dim") t.out_dim = static_cast<std::size_t>(parse_int(value));
    else if (key == "dropout_rate") t.dropout_rate = parse_double(value);
    else if (key == "checkpoint_interval") t.checkpoint_interval = static_cast<int>(parse_int(value));
    else if (key == "speaker_head_steps") t.speaker_head_steps = static_cast<int>(parse_int(value));
    else if (key == "encoder") cfg.encoder = encoder_kind_from_name(value);
    else if (key == "encoder_dim") cfg.encoder_dim = static_cast<std::size_t>(parse_int(value));
    else if (key == "manifest") cfg.manifest_path = value;
    else if (key == "feature_bank") cfg.feature_bank_path = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "synth_n_speakers") s.n_speakers = static_cast<int>(parse_int(value));
    else if (key == "synth_videos_per_speaker") s.videos_per_speaker = static_cast<int>(parse_int(value));
    else if (key == "synth_frames_per_video") s.frames_per_video = static_cast<int>(parse_int(value));
    else if (key == "synth_deception_rate") s.deception_rate = parse_double(value);
    else if (key == "synth_burst_strength") s.cue_burst_strength = parse_double(value);
    else if (key == "synth_burst_length") s.burst_length_frames = static_cast<int>(parse_int(value));
    else if (key == "synth_identity_confound") s.identity_confound = parse_double(value);
    else if (key == "synth_noise_std") s.noise_std = parse_double(value);
    else if (key == "synth_fps") s.fps = parse_double(value);
    else if (key == "synth_au_channels") s.au_channels = static_cast<int>(parse_int(value));
    else if (key == "synth_keypoints") s.keypoints = static_cast<int>(parse_int(value));
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        auto strip = [](std::string v) {
            while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.erase(v.begin());
            while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
            return v;
        };
        try {
            apply_config_line(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    const auto& t = cfg.train;
    const auto& s = cfg.synth;
    std::ostringstream out;
    out << "# effective configuration (" << kToolVersion << ")\n";
    out << "adam_beta1=" << fmt_double(t.adam_beta1) << "\n";
    out << "adam_beta2=" << fmt_double(t.adam_beta2) << "\n";
    out << "adam_epsilon=" << fmt_double(t.adam_epsilon) << "\n";
    out << "alpha=" << fmt_double(t.loss_weights.alpha) << "\n";
    out << "au_active_threshold=" << fmt_double(t.preprocess.au_active_threshold) << "\n";
    out << "batch_size=" << t.batch_size << "\n";
    out << "beta=" << fmt_double(t.loss_weights.beta) << "\n";
    out << "checkpoint_interval=" << t.checkpoint_interval << "\n";
    out << "dropout_rate=" << fmt_double(t.dropout_rate) << "\n";
    out << "encoder=" << encoder_kind_name(cfg.encoder) << "\n";
    out << "encoder_dim=" << cfg.encoder_dim << "\n";
    out << "epochs=" << t.epochs << "\n";
    out << "feature_bank=" << cfg.feature_bank_path << "\n";
    out << "frames_per_segment=" << t.preprocess.frames_per_segment << "\n";
    out << "hidden_dim=" << t.hidden_dim << "\n";
    out << "lambda=" << fmt_double(t.loss_weights.lambda) << "\n";
    out << "learning_rate=" << fmt_double(t.learning_rate) << "\n";
    out << "manifest=" << cfg.manifest_path << "\n";
    out << "margin=" << fmt_double(t.loss_weights.margin) << "\n";
    out << "micro_expression_max_duration=" << fmt_double(t.preprocess.micro_expression_max_duration) << "\n";
    out << "n_segments=" << t.preprocess.n_segments << "\n";
    out << "out_dim=" << t.out_dim << "\n";
    out << "output_dir=" << cfg.output_dir << "\n";
    out << "seed=" << t.seed << "\n";
    out << "speaker_head_steps=" << t.speaker_head_steps << "\n";
    out << "strategy=" << strategy_name(t.preprocess.strategy) << "\n";
    out << "synth_au_channels=" << s.au_channels << "\n";
    out << "synth_burst_length=" << s.burst_length_frames << "\n";
    out << "synth_burst_strength=" << fmt_double(s.cue_burst_strength) << "\n";
    out << "synth_deception_rate=" << fmt_double(s.deception_rate) << "\n";
    out << "synth_fps=" << fmt_double(s.fps) << "\n";
    out << "synth_frames_per_video=" << s.frames_per_video << "\n";
    out << "synth_identity_confound=" << fmt_double(s.identity_confound) << "\n";
    out << "synth_keypoints=" << s.keypoints << "\n";
    out << "synth_n_speakers=" << s.n_speakers << "\n";
    out << "synth_noise_std=" << fmt_double(s.noise_std) << "\n";
    out << "synth_videos_per_speaker=" << s.videos_per_speaker << "\n";
    out << "use_id_loss=" << (t.ablation.use_id_loss ? "true" : "false") << "\n";
    out << "use_reembedding=" << (t.ablation.use_reembedding ? "true" : "false") << "\n";
    out << "use_temporal_segmentation=" << (t.ablation.use_temporal_segmentation ? "true" : "false") << "\n";
    out << "use_triplet_loss=" << (t.ablation.use_triplet_loss ? "true" : "false") << "\n";
    out << "weight_decay=" << fmt_double(t.weight_decay) << "\n";
    return out.str();
}

void write_effective_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write effective config: " + path.string());
    out << serialize_run_config(cfg);
}

}  // namespace genlie
