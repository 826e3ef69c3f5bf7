#pragma once

#include <filesystem>
#include <string>

#include "genlie/synth.hpp"
#include "genlie/trainer.hpp"

namespace genlie {

enum class EncoderKind { Synthetic, Bank };

// Everything a run needs, with all defaults explicit. Unknown keys are
// rejected; the effective merged config is persisted next to every run's
// outputs so runs are reproducible bit-for-bit.
struct RunConfig {
    TrainConfig train;
    SynthConfig synth;
    EncoderKind encoder = EncoderKind::Synthetic;
    std::size_t encoder_dim = 768;
    std::string manifest_path;
    std::string feature_bank_path;
    std::string output_dir;
};

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);
void write_effective_config(const RunConfig& cfg, const std::filesystem::path& path);

const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_name(const std::string& name);

constexpr const char* kToolVersion = "genlie 0.1.0";

}  // namespace genlie
