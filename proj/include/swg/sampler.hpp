#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "swg/envelope.hpp"

namespace swg {

struct ManifestEntry {
    std::string path;
    DrumClass drum_class = DrumClass::kick;
};

/// Entries plus a per-class index. Classes appear in first-seen order.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<ManifestEntry> entries);

    void add(ManifestEntry e);
    const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const std::vector<DrumClass>& classes() const noexcept { return classes_; }
    /// Entry indices of a class; empty if absent.
    std::span<const std::size_t> indices_of(DrumClass c) const;
    std::size_t class_slot(DrumClass c) const;  // position in classes(); throws if absent

private:
    std::vector<ManifestEntry> entries_;
    std::vector<DrumClass> classes_;
    std::vector<std::vector<std::size_t>> by_class_;
};

enum class SamplingMode { natural, balanced };

std::string to_string(SamplingMode m);
SamplingMode parse_sampling_mode(const std::string& s);

/// Owns its RNG. natural: uniform over entries. balanced: uniform class, then
/// uniform entry within the class. Draws are with replacement.
class Sampler {
public:
    Sampler(const DatasetManifest& manifest, SamplingMode mode, std::uint64_t seed);

    std::size_t next();
    SamplingMode mode() const noexcept { return mode_; }

private:
    const DatasetManifest* manifest_;
    SamplingMode mode_;
    std::mt19937_64 rng_;
};

/// One draw with an external engine.
std::size_t sample(const DatasetManifest& manifest, SamplingMode mode, std::mt19937_64& rng);

struct ClassHistogram {
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    double chi_square = 0.0;
};

/// Counts of class slots 0..n_classes-1 and Pearson chi-square against the
/// uniform-over-classes null.
ClassHistogram class_histogram(std::span<const std::size_t> class_slots, std::size_t n_classes);

}  // namespace swg
