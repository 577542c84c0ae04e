#pragma once

// Toy-scale style-based waveform GAN.
//
// Generator: condition embedding -> 4-layer mapping network -> style vector
// (the embedding is concatenated again after the mapping). Synthesis starts
// from a learned constant and runs one block per entry of `channels`:
//   [avg-upsample x2] -> style modulation -> causal conv -> style-dependent
//   faded noise + bias -> leaky ReLU -> 1x1 to-audio skip
// The skip outputs are upsampled and summed, then optionally multiplied by the
// class envelope.
//
// Discriminator: residual blocks whose conv path and downsampled bypass are
// blended by AutoFade (sin a * conv + cos a * bypass), a fixed 1/sqrt(2) sum, or
// the bypass alone. The condition embedding joins the pooled features before the
// last two dense layers.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "swg/autodiff.hpp"
#include "swg/descriptors.hpp"
#include "swg/envelope.hpp"

namespace swg {

enum class DiscriminatorVariant { autofade, residual, bypass_only };

std::string to_string(DiscriminatorVariant v);
DiscriminatorVariant parse_discriminator_variant(const std::string& s);

struct ModelConfig {
    int sample_rate = 16000;
    int output_length = 4096;
    std::vector<int> channels{64, 64, 32, 32, 16};
    std::vector<int> disc_channels{16, 32, 32, 64, 64};
    int kernel = 9;
    int mapping_layers = 4;
    int d_z = 64;
    int d_w = 64;
    int d_embed = 16;
    std::vector<DrumClass> classes{DrumClass::kick, DrumClass::snare, DrumClass::closed_hh};
    bool use_descriptors = true;
    bool use_envelope = true;
    DiscriminatorVariant disc_variant = DiscriminatorVariant::autofade;
    double autofade_init = 0.7853981633974483;  // pi/4

    std::size_t num_blocks() const noexcept { return channels.size(); }
    std::size_t base_length() const;
    /// one-hot classes, then (when enabled) 3 descriptor values in [0,1] and 3 mask bits
    std::size_t cond_dim() const noexcept;
    std::size_t style_dim() const noexcept { return static_cast<std::size_t>(d_w + d_embed); }
    std::size_t class_slot(DrumClass c) const;
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct LatentCode {
    std::vector<double> z;
};

/// Label plus optional descriptor targets. Descriptors switched off in `mask`
/// are fed as zeros with a zero mask bit.
struct ConditionVector {
    DrumClass label = DrumClass::kick;
    DescriptorVector descriptors{};
    DescriptorMask mask{{false, false, false}};

    std::vector<double> encode(const ModelConfig& cfg) const;
};

/// Parameters in creation order; addresses are stable.
class ParamSet {
public:
    ad::Param& add(std::string name, ad::Shape shape, std::vector<double> init);
    ad::Param& get(const std::string& name);
    const ad::Param& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t index(const std::string& name) const;

    std::deque<ad::Param>& all() noexcept { return params_; }
    const std::deque<ad::Param>& all() const noexcept { return params_; }
    std::size_t size() const noexcept { return params_.size(); }
    std::size_t count() const noexcept;
    void zero_grad();

private:
    std::deque<ad::Param> params_;
    std::map<std::string, std::size_t> index_;
};

/// Parameters placed on a graph, in ParamSet order.
struct BoundParams {
    std::vector<ad::Tensor> tensors;
    const ad::Tensor& operator[](std::size_t i) const { return tensors[i]; }
};

BoundParams bind(ad::Graph& g, ParamSet& params, bool trainable);
/// Copies values in as constants; safe to call concurrently on a shared ParamSet.
BoundParams bind_constant(ad::Graph& g, const ParamSet& params);

/// Per-block noise sequences, one per synthesis block (length = block time length).
using BlockNoise = std::vector<std::vector<double>>;

/// Linear fade from 1 at t = 0 to 0 at t = len - 1.
std::vector<double> noise_fade(std::size_t len);

/// y = x + outer(gain, fade * eta) + bias with gain = affine(style; gain_w, gain_b).
/// `eta` is shared across channels.
ad::Tensor noise_layer(const ad::Tensor& x, const ad::Tensor& style, const ad::Tensor& gain_w,
                       const ad::Tensor& gain_b, const ad::Tensor& bias, std::span<const double> eta);

/// sin(alpha) x + cos(alpha) y
ad::Tensor autofade(const ad::Tensor& x, const ad::Tensor& y, const ad::Tensor& alpha);

class Generator {
public:
    Generator() = default;
    Generator(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    ParamSet& params() noexcept { return params_; }
    const ParamSet& params() const noexcept { return params_; }

    /// Envelope per class slot; required when use_envelope is set.
    std::vector<EnvelopeTable>& envelopes() noexcept { return envelopes_; }
    const std::vector<EnvelopeTable>& envelopes() const noexcept { return envelopes_; }

    LatentCode sample_latent(std::mt19937_64& rng) const;
    BlockNoise sample_noise(std::mt19937_64& rng) const;
    BlockNoise zero_noise() const;

    ad::Tensor mapping(const BoundParams& p, const LatentCode& z, const ConditionVector& cond) const;
    /// Same map with the latent as a graph tensor (lets gradients reach z).
    ad::Tensor mapping(const BoundParams& p, const ad::Tensor& z, const ConditionVector& cond) const;
    /// Returns the [output_length] waveform. Throws std::runtime_error naming the
    /// block when an activation becomes non-finite.
    ad::Tensor forward(const BoundParams& p, const LatentCode& z, const ConditionVector& cond,
                       const BlockNoise& noise) const;

    /// Convenience: no-grad forward into a clip.
    AudioClip synthesize(const LatentCode& z, const ConditionVector& cond, const BlockNoise& noise) const;

private:
    ModelConfig cfg_;
    ParamSet params_;
    std::vector<EnvelopeTable> envelopes_;
};

class Discriminator {
public:
    Discriminator() = default;
    Discriminator(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    ParamSet& params() noexcept { return params_; }
    const ParamSet& params() const noexcept { return params_; }
    void set_variant(DiscriminatorVariant v) noexcept { cfg_.disc_variant = v; }

    /// Scalar score for a [output_length] waveform tensor.
    ad::Tensor forward(const BoundParams& p, const ad::Tensor& audio, const ConditionVector& cond) const;
    double score(const AudioClip& x, const ConditionVector& cond) const;

private:
    ModelConfig cfg_;
    ParamSet params_;
};

struct WganLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
    double penalty = 0.0;
};

/// d = mean(fake) - mean(real) + lambda mean(max(0, |grad| - 1)^2), g = -mean(fake).
/// An empty norm list contributes no penalty.
WganLosses wgan_lp_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                        std::span<const double> interp_grad_norms, double lambda);

}  // namespace swg
