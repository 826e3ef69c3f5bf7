// Command-line entry point: synth, select-frames, train, evaluate, gradcheck.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "genlie/config.hpp"
#include "genlie/synth.hpp"
#include "genlie/text.hpp"

namespace fs = std::filesystem;
using namespace genlie;

namespace {

fs::path resolve_output_dir(const RunConfig& cfg) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("GENLIE_OUTPUT_DIR")) return env;
    return ".";
}

struct EncoderOwner {
    std::optional<FeatureBank> bank;
    std::optional<SyntheticEncoder> synthetic;

    EncoderHandle handle() const {
        EncoderHandle h;
        if (bank) h.bank = &*bank;
        if (synthetic) h.synthetic = &*synthetic;
        return h;
    }
};

EncoderOwner open_encoder(const RunConfig& cfg) {
    EncoderOwner owner;
    if (cfg.encoder == EncoderKind::Bank) {
        if (cfg.feature_bank_path.empty())
            throw std::runtime_error("encoder=bank requires feature_bank=<path>");
        if (!fs::exists(cfg.feature_bank_path))
            throw std::runtime_error("feature bank not found: " + cfg.feature_bank_path);
        owner.bank = FeatureBank::load(cfg.feature_bank_path);
        if (owner.bank->feature_dim() != cfg.encoder_dim)
            throw std::runtime_error("feature bank dimension " +
                                     std::to_string(owner.bank->feature_dim()) +
                                     " does not match configured encoder_dim " +
                                     std::to_string(cfg.encoder_dim));
    } else {
        owner.synthetic.emplace(cfg.train.seed, cfg.encoder_dim);
    }
    return owner;
}

CorpusManifest open_manifest(const RunConfig& cfg) {
    if (cfg.manifest_path.empty()) throw std::runtime_error("a manifest path is required");
    if (!fs::exists(cfg.manifest_path))
        throw std::runtime_error("manifest not found: " + cfg.manifest_path);
    return load_manifest(cfg.manifest_path);
}

void print_metrics(const MetricsReport& m, double probe_acc) {
    auto line = [](const char* name, const std::string& value) {
        std::cout << "  " << std::left << std::setw(22) << name << value << "\n";
    };
    line("F1 (positive class)", fmt_double(m.f1));
    line("Accuracy", fmt_double(m.acc));
    line("AUC", m.auc_defined ? fmt_double(m.auc) : std::string("undefined (single class)"));
    line("speaker probe acc", fmt_double(probe_acc));
    std::cout << "  counts: tp=" << m.tp << " fp=" << m.fp << " tn=" << m.tn << " fn=" << m.fn
              << " (pos=" << m.n_pos << ", neg=" << m.n_neg << ")\n";
}

int cmd_synth(const RunConfig& cfg) {
    const fs::path out_dir = resolve_output_dir(cfg);
    fs::create_directories(out_dir);
    const SynthCorpus corpus = generate_corpus(cfg.synth);
    save_manifest(corpus.manifest, out_dir / "manifest.txt", out_dir / "tracks");
    save_burst_ground_truth(corpus, out_dir / "bursts.txt");
    write_effective_config(cfg, out_dir / "effective-config.txt");
    std::cout << "wrote " << corpus.manifest.tracks.size() << " tracks, "
              << corpus.manifest.speaker_index.size() << " speakers to " << out_dir.string() << "\n";
    return 0;
}

int cmd_select_frames(const RunConfig& cfg) {
    const CorpusManifest manifest = open_manifest(cfg);
    const fs::path out_dir = resolve_output_dir(cfg);
    fs::create_directories(out_dir);
    const fs::path out_path = out_dir / "selections.txt";
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());

    for (const auto& track : manifest.tracks) {
        const SegmentSelection sel = preprocess(track, cfg.train.preprocess);
        out << sel.video_id << '\t' << strategy_name(sel.strategy) << '\t';
        for (std::size_t s = 0; s < sel.segments.size(); ++s) {
            if (s) out << ';';
            for (std::size_t i = 0; i < sel.segments[s].size(); ++i)
                out << (i ? "," : "") << sel.segments[s][i];
        }
        out << '\t';
        for (std::size_t i = 0; i < sel.scores.size(); ++i)
            out << (i ? "," : "") << fmt_double(sel.scores[i]);
        out << '\n';
    }
    write_effective_config(cfg, out_dir / "effective-config.txt");
    std::cout << "wrote selections for " << manifest.tracks.size() << " videos to "
              << out_path.string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const CorpusManifest manifest = open_manifest(cfg);
    const EncoderOwner encoder = open_encoder(cfg);
    const fs::path out_dir = resolve_output_dir(cfg);
    fs::create_directories(out_dir);
    write_effective_config(cfg, out_dir / "effective-config.txt");

    const TrainResult result = train(manifest, encoder.handle(), cfg.train);
    if (result.single_label_warning)
        std::cerr << "warning: corpus contains a single label; triplet loss is inactive\n";

    write_history_csv(result.history, out_dir / "history.csv");
    save_checkpoint(result.params, out_dir / "checkpoint.glm1");

    if (!result.history.empty()) {
        const auto& last = result.history.back();
        std::cout << "final epoch " << last.epoch << ": l_total=" << fmt_double(last.losses.l_total)
                  << " l_cls=" << fmt_double(last.losses.l_cls) << "\n";
        print_metrics(last.metrics, last.speaker_probe_acc);
    }
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
    if (!fs::exists(checkpoint_path))
        throw std::runtime_error("checkpoint not found: " + checkpoint_path);
    const ModelParams params = load_checkpoint(checkpoint_path);
    const CorpusManifest manifest = open_manifest(cfg);
    const EncoderOwner encoder = open_encoder(cfg);
    const std::vector<Vec> pooled =
        pool_corpus(manifest, encoder.handle(), cfg.train.preprocess,
                    cfg.train.ablation.use_temporal_segmentation);
    const EvalReport report = evaluate(params, manifest, pooled, cfg.train.seed);
    print_metrics(report.metrics, report.speaker_probe_acc);

    const fs::path out_dir = resolve_output_dir(cfg);
    fs::create_directories(out_dir);
    write_effective_config(cfg, out_dir / "effective-config.txt");
    std::ofstream rec(out_dir / "evaluation.txt", std::ios::binary);
    rec << "f1=" << fmt_double(report.metrics.f1) << "\n";
    rec << "acc=" << fmt_double(report.metrics.acc) << "\n";
    rec << "auc=" << (report.metrics.auc_defined ? fmt_double(report.metrics.auc) : "nan") << "\n";
    rec << "speaker_probe_acc=" << fmt_double(report.speaker_probe_acc) << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& dims, int batch, int seeds) {
    auto parts = split(dims, ',');
    if (parts.size() != 3 && parts.size() != 4)
        throw std::runtime_error("--dims expects D,H,D_out[,C]");
    const auto d = static_cast<std::size_t>(parse_int(parts[0]));
    const auto h = static_cast<std::size_t>(parse_int(parts[1]));
    const auto d_out = static_cast<std::size_t>(parse_int(parts[2]));
    const auto c = parts.size() == 4 ? static_cast<std::size_t>(parse_int(parts[3])) : 3;

    const LossWeights weights;  // alpha=beta=0.1, lambda=1.0, m=0.2
    constexpr double kTolerance = 1e-4;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const GradCheckReport report = gradient_check(seed + static_cast<std::uint64_t>(s), d, h,
                                                      d_out, c, static_cast<std::size_t>(batch),
                                                      weights);
        if (s == 0)
            for (const auto& e : report.entries)
                std::cout << std::left << std::setw(8) << e.tensor
                          << " max rel err " << fmt_double(e.max_rel_error) << "\n";
        worst = std::max(worst, report.max_rel_error);
    }
    std::cout << "worst over " << seeds << " seed(s): " << fmt_double(worst) << "\n";
    if (worst >= kTolerance) {
        std::cerr << "gradcheck FAILED (tolerance " << kTolerance << ")\n";
        return 1;
    }
    std::cout << "gradcheck OK\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GenLie pipeline: frame selection, re-embedding, adversarial speaker "
                 "decorrelation, triplet-regularized classification"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_flag;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run-config file (key=value lines)");
        sub->add_option("--set", overrides, "override a config key, e.g. --set seed=7")
            ->type_name("KEY=VALUE");
        sub->add_option("--out", out_flag, "output directory");
    };

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cue corpus");
    add_common(synth_cmd);

    auto* select_cmd = app.add_subcommand("select-frames", "run frame selection over a manifest");
    add_common(select_cmd);
    std::string manifest_flag, strategy_flag;
    select_cmd->add_option("--manifest", manifest_flag, "corpus manifest");
    select_cmd->add_option("--strategy", strategy_flag,
                           "uniform|au|micro-expression|gaze|posture|fusion");

    auto* train_cmd = app.add_subcommand("train", "train the model");
    add_common(train_cmd);
    train_cmd->add_option("--manifest", manifest_flag, "corpus manifest");

    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
    add_common(eval_cmd);
    std::string checkpoint_flag;
    eval_cmd->add_option("--checkpoint", checkpoint_flag, "model checkpoint")->required();
    eval_cmd->add_option("--manifest", manifest_flag, "corpus manifest");

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    std::uint64_t gc_seed = 42;
    std::string gc_dims = "6,5,4";
    int gc_batch = 4, gc_seeds = 1;
    grad_cmd->add_option("--seed", gc_seed, "base seed");
    grad_cmd->add_option("--dims", gc_dims, "D,H,D_out[,C]");
    grad_cmd->add_option("--batch", gc_batch, "batch size");
    grad_cmd->add_option("--seeds", gc_seeds, "number of seeds to sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) cfg = load_run_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("--set expects KEY=VALUE, got '" + kv + "'");
            apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!out_flag.empty()) cfg.output_dir = out_flag;
        if (!manifest_flag.empty()) cfg.manifest_path = manifest_flag;
        if (!strategy_flag.empty()) cfg.train.preprocess.strategy = strategy_from_name(strategy_flag);

        if (synth_cmd->parsed()) return cmd_synth(cfg);
        if (select_cmd->parsed()) return cmd_select_frames(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_evaluate(cfg, checkpoint_flag);
        if (grad_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_dims, gc_batch, gc_seeds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
