#pragma once

// Plain-text run configuration: one `key = value` per line, '#' starts a
// comment. Unknown keys are rejected so typos surface immediately.

#include <filesystem>
#include <string>

#include "swg/descriptors.hpp"
#include "swg/dsp.hpp"
#include "swg/gan.hpp"
#include "swg/train.hpp"

namespace swg {

/// descriptor.* keys fill train.descriptors.
struct RunConfig {
    ModelConfig model{};
    TrainConfig train{};
    dsp::MelConfig mel{};
    int steps = 2000;
};

/// Starts from the defaults and applies every line of `text`.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key with its current value; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

/// The model.* subset, as stored inside checkpoints.
std::string model_config_text(const ModelConfig& m);
ModelConfig parse_model_config(const std::string& text);

}  // namespace swg
