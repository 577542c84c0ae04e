#include "swg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "swg/io.hpp"
#include "swg/train.hpp"

namespace swg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void normalize_peak(std::vector<double>& x, double peak) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    if (m > 0.0)
        for (auto& v : x) v *= peak / m;
}

}  // namespace

AudioClip synth_clip(DrumClass cls, std::mt19937_64& rng, int sample_rate, std::size_t length) {
    if (sample_rate <= 0 || length == 0) throw std::invalid_argument("synth_clip: bad sample rate or length");
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    auto between = [&](double a, double b) { return a + (b - a) * U(rng); };
    const double fs = sample_rate;
    std::vector<double> x(length, 0.0);

    switch (cls) {
        case DrumClass::kick: {
            const double f0 = between(60.0, 90.0);
            const double sweep = between(1.0, 2.0);
            const double tau = between(0.08, 0.15);
            const double click = between(0.2, 0.4);
            double phase = 0.0;
            for (std::size_t n = 0; n < length; ++n) {
                const double t = n / fs;
                phase += kTwoPi * f0 * (1.0 + sweep * std::exp(-t / 0.015)) / fs;
                x[n] = std::sin(phase) * std::exp(-t / tau) + click * N(rng) * std::exp(-t / 0.001);
            }
            break;
        }
        case DrumClass::snare: {
            const double f0 = between(170.0, 190.0);
            const double tau_t = between(0.03, 0.06);
            const double tau_n = between(0.05, 0.1);
            const double mix = between(0.5, 0.8);
            for (std::size_t n = 0; n < length; ++n) {
                const double t = n / fs;
                x[n] = (1.0 - mix) * std::sin(kTwoPi * f0 * t) * std::exp(-t / tau_t) +
                       mix * N(rng) * std::exp(-t / tau_n);
            }
            break;
        }
        case DrumClass::closed_hh: {
            const double tau = between(0.01, 0.03);
            double prev = 0.0, prev2 = 0.0;
            for (std::size_t n = 0; n < length; ++n) {
                const double t = n / fs;
                const double w = N(rng);
                x[n] = (w - 2.0 * prev + prev2) * std::exp(-t / tau);  // second difference
                prev2 = prev;
                prev = w;
            }
            break;
        }
        default:
            throw std::invalid_argument("synth_clip: no synthetic model for class " + to_string(cls));
    }
    normalize_peak(x, between(0.7, 0.95));
    return {std::move(x), sample_rate};
}

std::array<std::size_t, 3> allocate_counts(std::size_t n, const std::array<double, 3>& p) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw std::invalid_argument("proportions must be non-negative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("proportions must sum to 1");
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = p[i] * static_cast<double>(n);
        // round before flooring so 0.6 * 1000 is 600, not 599
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[i] = exact - static_cast<double>(counts[i]);
        used += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++counts[order[k % 3]];
    return counts;
}

std::pair<DatasetManifest, std::vector<AudioClip>> synth_set(const SynthOptions& opts, std::uint64_t seed) {
    const auto counts = allocate_counts(opts.n, opts.proportions);
    DatasetManifest m;
    std::vector<AudioClip> clips;
    clips.reserve(opts.n);
    std::size_t global = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i, ++global) {
            std::mt19937_64 rng(clip_seed(seed, global));
            clips.push_back(synth_clip(kSynthClasses[c], rng, opts.sample_rate, opts.length));
            char name[64];
            std::snprintf(name, sizeof name, "%s_%04zu.wav", to_string(kSynthClasses[c]).c_str(), i);
            m.add({name, kSynthClasses[c]});
        }
    }
    return {std::move(m), std::move(clips)};
}

DatasetManifest synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& opts, std::uint64_t seed) {
    auto [m, clips] = synth_set(opts, seed);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < clips.size(); ++i) io::write_wav(clips[i], out_dir / m.entries()[i].path);
    io::write_manifest(m, out_dir / "manifest.jsonl");
    return m;
}

}  // namespace swg
