#pragma once

// Synthetic three-class drum set used for toy training and tests.
//   kick:      60-90 Hz decaying sine with a downward pitch sweep plus a click
//   snare:     ~180 Hz decaying sine plus a broadband noise burst
//   closed_hh: short high-passed noise

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "swg/dsp.hpp"
#include "swg/envelope.hpp"
#include "swg/sampler.hpp"

namespace swg {

inline constexpr std::array<DrumClass, 3> kSynthClasses{DrumClass::kick, DrumClass::snare, DrumClass::closed_hh};

struct SynthOptions {
    std::size_t n = 300;
    /// kick, snare, closed_hh; must sum to 1.
    std::array<double, 3> proportions{0.1, 0.6, 0.3};
    int sample_rate = 16000;
    std::size_t length = 4096;
};

AudioClip synth_clip(DrumClass cls, std::mt19937_64& rng, int sample_rate, std::size_t length);

/// Largest-remainder split of n; ties go to the earlier class.
std::array<std::size_t, 3> allocate_counts(std::size_t n, const std::array<double, 3>& proportions);

/// In-memory set: clips in class order with a manifest of "<class>_<index>.wav" names.
std::pair<DatasetManifest, std::vector<AudioClip>> synth_set(const SynthOptions& opts, std::uint64_t seed);

/// Writes float32 WAVs and manifest.jsonl into out_dir.
DatasetManifest synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& opts, std::uint64_t seed);

}  // namespace swg
