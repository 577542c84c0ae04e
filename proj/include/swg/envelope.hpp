#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swg/dsp.hpp"

namespace swg {

enum class DrumClass { kick, snare, tom, closed_hh, open_hh };

inline constexpr std::size_t kNumDrumClasses = 5;

std::string to_string(DrumClass c);
DrumClass parse_drum_class(const std::string& name);

/// Per-class amplitude envelope: non-negative, peak 1, last value exactly 0.
struct EnvelopeTable {
    DrumClass drum_class = DrumClass::kick;
    std::vector<double> values;
    int sample_rate = 16000;

    std::size_t size() const noexcept { return values.size(); }
};

struct EnvelopeOptions {
    std::size_t length = 65536;
    std::size_t smooth_len = 1025;
    std::size_t fade_len = 2048;
};

/// Centered moving average; the window shrinks at the edges.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);

/// Peak-normalize each clip, pad/truncate to `length`, average the Hilbert
/// magnitudes, smooth, fade the tail linearly to 0 and renormalize to peak 1.
EnvelopeTable extract_class_envelope(DrumClass cls, std::span<const AudioClip> clips, const EnvelopeOptions& opts);

/// y[n] = x[n] * e[n]
AudioClip apply_envelope(const AudioClip& x, const EnvelopeTable& env);

}  // namespace swg
