#include "swg/envelope.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace swg {

namespace {
constexpr std::array<const char*, kNumDrumClasses> kClassNames{"kick", "snare", "tom", "closed_hh", "open_hh"};
}

std::string to_string(DrumClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

DrumClass parse_drum_class(const std::string& name) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (name == kClassNames[i]) return static_cast<DrumClass>(i);
    throw std::invalid_argument("unknown drum class '" + name + "'");
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
    if (window == 0) throw std::invalid_argument("moving average window must be >= 1");
    const std::size_t n = x.size();
    const std::size_t half = window / 2;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + (window - half));
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

EnvelopeTable extract_class_envelope(DrumClass cls, std::span<const AudioClip> clips, const EnvelopeOptions& opts) {
    if (clips.empty()) throw std::invalid_argument("extract_class_envelope: empty clip list");
    if (opts.fade_len < 1 || opts.fade_len > opts.length)
        throw std::invalid_argument("extract_class_envelope: need 1 <= fade_len <= length");
    if (opts.length < 4) throw std::invalid_argument("extract_class_envelope: length must be >= 4");
    const int rate = clips.front().sample_rate;
    const std::size_t len = opts.length;

    std::vector<double> acc(len, 0.0);
    std::vector<double> buf(len);
    for (const auto& clip : clips) {
        clip.validate();
        if (clip.sample_rate != rate) throw std::invalid_argument("extract_class_envelope: mixed sample rates");
        double peak = 0.0;
        for (double s : clip.samples) peak = std::max(peak, std::abs(s));
        std::fill(buf.begin(), buf.end(), 0.0);
        if (peak > 0.0) {
            const std::size_t n = std::min(len, clip.size());
            for (std::size_t i = 0; i < n; ++i) buf[i] = clip.samples[i] / peak;
        }
        const auto mag = dsp::hilbert_envelope(buf);
        for (std::size_t i = 0; i < len; ++i) acc[i] += mag[i];
    }
    for (double& v : acc) v /= static_cast<double>(clips.size());

    auto env = moving_average(acc, std::max<std::size_t>(1, opts.smooth_len));
    const std::size_t fade_start = len - opts.fade_len;
    for (std::size_t i = 0; i < opts.fade_len; ++i) {
        const double gain = opts.fade_len == 1 ? 0.0
                                               : static_cast<double>(opts.fade_len - 1 - i) /
                                                     static_cast<double>(opts.fade_len - 1);
        env[fade_start + i] *= gain;
    }
    const double peak = *std::max_element(env.begin(), env.end());
    if (!(peak > 0.0)) throw std::invalid_argument("extract_class_envelope: all clips are silent");
    for (double& v : env) v = std::max(0.0, v / peak);
    env.back() = 0.0;
    return {cls, std::move(env), rate};
}

AudioClip apply_envelope(const AudioClip& x, const EnvelopeTable& env) {
    if (x.size() != env.size())
        throw std::invalid_argument("apply_envelope: clip length " + std::to_string(x.size()) +
                                    " != envelope length " + std::to_string(env.size()));
    if (x.sample_rate != env.sample_rate) throw std::invalid_argument("apply_envelope: sample rate mismatch");
    AudioClip y(x.samples, x.sample_rate);
    for (std::size_t i = 0; i < y.size(); ++i) y.samples[i] *= env.values[i];
    return y;
}

}  // namespace swg
