#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swg/descriptors.hpp"
#include "swg/envelope.hpp"
#include "swg/gan.hpp"
#include "swg/sampler.hpp"

namespace swg {

struct TrainConfig {
    int batch_size = 10;
    double lr = 2e-3;
    double beta1 = 0.0;
    double beta2 = 0.99;
    double adam_eps = 1e-8;
    double lambda_lp = 10.0;
    /// Penalty evaluated every N discriminator steps and scaled by N.
    int penalty_interval = 4;
    /// Step of the central difference used to differentiate the gradient norm.
    double penalty_fd_step = 1e-3;
    double desc_weight = 0.05;
    /// Probability that each descriptor is switched on in a training condition.
    double desc_keep_prob = 0.5;
    SamplingMode sampler = SamplingMode::balanced;
    /// Steps per logging epoch (used for the initial/final descriptor trend).
    int epoch_steps = 100;
    std::size_t env_smooth_len = 65;
    std::size_t env_fade_len = 128;
    DescriptorConfig descriptors{};

    void validate() const;
};

/// Clips (onset-aligned, padded or truncated to the model length) with their
/// classes and precomputed descriptors.
struct TrainingSet {
    DatasetManifest manifest;
    std::vector<AudioClip> clips;
    std::vector<DescriptorVector> descriptors;

    static TrainingSet build(DatasetManifest manifest, std::vector<AudioClip> clips, std::size_t length,
                             const DescriptorConfig& dcfg = {});
    static TrainingSet load(const std::filesystem::path& manifest_path, std::size_t length,
                            const DescriptorConfig& dcfg = {});
};

/// Descriptor values of the training items, kept with the checkpoint so that
/// evaluation can derive level scales and quantiles.
struct DatasetDescriptors {
    std::vector<DrumClass> classes;
    std::vector<DescriptorVector> values;

    std::vector<double> column(Descriptor d) const;
    std::vector<double> column(Descriptor d, DrumClass c) const;
};

struct Checkpoint {
    ModelConfig model;
    Generator generator;
    Discriminator discriminator;
    DatasetDescriptors data;
    std::uint64_t step = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "SWGK", u32 version, u32 config length, config text, u64 step, u32 tensor
/// count, then per tensor: u32 name length, name, u32 rank, u32 dims, f32 data.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fresh parameters, class envelopes and dataset descriptors.
Checkpoint initialize(const ModelConfig& model, const TrainConfig& tc, const TrainingSet& data, std::uint64_t seed);

struct LogRow {
    int step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double desc_l1 = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LogRow> log;
    double seconds = 0.0;
};

/// Mean desc_l1 over log rows with step in [begin, end).
double mean_desc_l1(std::span<const LogRow> log, int begin, int end);

using ProgressFn = std::function<void(const LogRow&)>;

/// Alternating 1:1 discriminator / generator updates. Deterministic for a seed.
/// Throws std::runtime_error naming the step when a loss turns non-finite.
TrainResult train(const ModelConfig& model, const TrainConfig& tc, const TrainingSet& data, int steps,
                  std::uint64_t seed, const ProgressFn& progress = {});

/// Continue from an existing checkpoint.
TrainResult train_from(Checkpoint ckpt, const TrainConfig& tc, const TrainingSet& data, int steps, std::uint64_t seed,
                       const ProgressFn& progress = {});

void write_loss_log(std::span<const LogRow> log, const std::filesystem::path& path);

struct GenerateResult {
    std::vector<AudioClip> clips;
    double seconds = 0.0;
    double clips_per_second = 0.0;
    /// Seconds of audio produced per wall-clock second.
    double realtime_factor = 0.0;
};

/// Per-clip RNG streams derived from (seed, index), so parallel and serial runs
/// produce identical audio.
std::uint64_t clip_seed(std::uint64_t seed, std::size_t index);

GenerateResult generate_batch(const Checkpoint& ckpt, std::span<const ConditionVector> conds, std::uint64_t seed,
                              bool parallel = true);

}  // namespace swg
