#pragma once

// Differentiable brightness / depth / warmth on a 0-100 scale.
//
// All three are logistic maps of spectral centroid and band-power ratios of the
// whole-clip power spectrum (no framing). Every input to the logistic is
// homogeneous of degree 0 in the samples, so the descriptors ignore gain.
//
//   brightness = 100 sigmoid(a ln(C / c0) + b r_hi + d)    r_hi   = P(f >= hi_edge) / P
//   depth      = 100 sigmoid(a_d r_lo + b_d ln(c1 / C))    r_lo   = P(f <= lo_edge) / P
//   warmth     = 100 sigmoid(a_w r_warm + b_w ln(c2 / C))  r_warm = P(warm_lo <= f <= warm_hi) / P
//
// Each power bin is floored by eps before use, which gives silence a defined value.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "swg/autodiff.hpp"
#include "swg/dsp.hpp"

namespace swg {

enum class Descriptor { brightness = 0, depth = 1, warmth = 2 };

inline constexpr std::size_t kNumDescriptors = 3;
inline constexpr std::array<Descriptor, kNumDescriptors> kAllDescriptors{Descriptor::brightness, Descriptor::depth,
                                                                         Descriptor::warmth};

std::string to_string(Descriptor d);
Descriptor parse_descriptor(const std::string& name);

struct DescriptorVector {
    double brightness = 0.0;
    double depth = 0.0;
    double warmth = 0.0;

    double operator[](Descriptor d) const noexcept;
    double& operator[](Descriptor d) noexcept;
    std::array<double, kNumDescriptors> as_array() const noexcept { return {brightness, depth, warmth}; }
};

/// Which descriptors take part in a loss or a conditioning vector.
struct DescriptorMask {
    std::array<bool, kNumDescriptors> on{true, true, true};

    static DescriptorMask all() { return {}; }
    static DescriptorMask only(Descriptor d);
    bool operator[](Descriptor d) const noexcept { return on[static_cast<std::size_t>(d)]; }
    std::size_t count() const noexcept;
};

struct DescriptorConfig {
    double eps = 1e-12;

    double bright_a = 1.5;
    double bright_c0 = 500.0;
    double bright_b = 2.0;
    double bright_d = -1.0;
    double bright_hi_edge = 2000.0;

    double depth_a = 4.0;
    double depth_b = 0.5;
    double depth_c1 = 1000.0;
    double depth_lo_edge = 200.0;

    double warm_a = 4.0;
    double warm_b = 0.4;
    double warm_c2 = 2000.0;
    double warm_lo = 100.0;
    double warm_hi = 420.0;

    /// Throws std::invalid_argument if a band edge is non-increasing or above Nyquist.
    void validate(int sample_rate) const;
};

inline constexpr std::size_t kMinDescriptorLength = 64;

namespace descriptors {

/// Differentiable routes. `x` is a 1-D tensor of samples.
ad::Tensor brightness(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg = {});
ad::Tensor depth(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg = {});
ad::Tensor warmth(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg = {});
ad::Tensor compute(Descriptor d, const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg = {});

/// Mean absolute difference over the masked descriptors. `target` holds plain
/// numbers; each produced entry is a scalar tensor (invalid where masked off).
ad::Tensor l1_loss(const DescriptorVector& target, const std::array<ad::Tensor, kNumDescriptors>& produced,
                   const DescriptorMask& mask);

}  // namespace descriptors

double brightness(const AudioClip& clip, const DescriptorConfig& cfg = {});
double depth(const AudioClip& clip, const DescriptorConfig& cfg = {});
double warmth(const AudioClip& clip, const DescriptorConfig& cfg = {});
DescriptorVector describe(const AudioClip& clip, const DescriptorConfig& cfg = {});

double descriptor_loss(const DescriptorVector& target, const DescriptorVector& produced, const DescriptorMask& mask);

struct MatchOptions {
    int steps = 500;
    double step_size = 1e-3;
    DescriptorMask mask{};
    DescriptorConfig config{};
};

struct MatchResult {
    AudioClip clip;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    DescriptorVector achieved{};
    int best_step = 0;
};

/// Adam-driven gradient descent on the samples minimizing descriptor_loss.
/// Keeps the best iterate, so final_loss <= initial_loss. Output peak is <= 1.
/// Throws std::runtime_error naming the step if the loss turns non-finite.
MatchResult match_descriptors(const AudioClip& init, const DescriptorVector& target, const MatchOptions& opts);

}  // namespace swg
