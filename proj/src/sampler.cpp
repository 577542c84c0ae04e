#include "swg/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace swg {

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void DatasetManifest::add(ManifestEntry e) {
    auto it = std::find(classes_.begin(), classes_.end(), e.drum_class);
    std::size_t slot;
    if (it == classes_.end()) {
        slot = classes_.size();
        classes_.push_back(e.drum_class);
        by_class_.emplace_back();
    } else {
        slot = static_cast<std::size_t>(it - classes_.begin());
    }
    by_class_[slot].push_back(entries_.size());
    entries_.push_back(std::move(e));
}

std::span<const std::size_t> DatasetManifest::indices_of(DrumClass c) const {
    auto it = std::find(classes_.begin(), classes_.end(), c);
    if (it == classes_.end()) return {};
    return by_class_[static_cast<std::size_t>(it - classes_.begin())];
}

std::size_t DatasetManifest::class_slot(DrumClass c) const {
    auto it = std::find(classes_.begin(), classes_.end(), c);
    if (it == classes_.end()) throw std::invalid_argument("class " + to_string(c) + " not in manifest");
    return static_cast<std::size_t>(it - classes_.begin());
}

std::string to_string(SamplingMode m) { return m == SamplingMode::natural ? "natural" : "balanced"; }

SamplingMode parse_sampling_mode(const std::string& s) {
    if (s == "natural") return SamplingMode::natural;
    if (s == "balanced") return SamplingMode::balanced;
    throw std::invalid_argument("unknown sampling mode '" + s + "' (expected natural|balanced)");
}

std::size_t sample(const DatasetManifest& manifest, SamplingMode mode, std::mt19937_64& rng) {
    if (manifest.empty()) throw std::invalid_argument("cannot sample from an empty manifest");
    if (mode == SamplingMode::natural) {
        std::uniform_int_distribution<std::size_t> pick(0, manifest.size() - 1);
        return pick(rng);
    }
    const auto& classes = manifest.classes();
    std::uniform_int_distribution<std::size_t> pick_class(0, classes.size() - 1);
    const auto idx = manifest.indices_of(classes[pick_class(rng)]);
    std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    return idx[pick(rng)];
}

Sampler::Sampler(const DatasetManifest& manifest, SamplingMode mode, std::uint64_t seed)
    : manifest_(&manifest), mode_(mode), rng_(seed) {
    if (manifest.empty()) throw std::invalid_argument("cannot sample from an empty manifest");
}

std::size_t Sampler::next() { return sample(*manifest_, mode_, rng_); }

ClassHistogram class_histogram(std::span<const std::size_t> class_slots, std::size_t n_classes) {
    if (n_classes == 0) throw std::invalid_argument("class_histogram: no classes");
    ClassHistogram h;
    h.counts.assign(n_classes, 0);
    for (auto s : class_slots) {
        if (s >= n_classes) throw std::out_of_range("class_histogram: class slot out of range");
        ++h.counts[s];
    }
    h.total = class_slots.size();
    if (h.total == 0) return h;
    const double expected = static_cast<double>(h.total) / static_cast<double>(n_classes);
    for (auto c : h.counts) {
        const double d = static_cast<double>(c) - expected;
        h.chi_square += d * d / expected;
    }
    return h;
}

}  // namespace swg
