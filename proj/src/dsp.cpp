#include "swg/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace swg {

void AudioClip::validate() const {
    if (samples.empty()) throw std::invalid_argument("audio clip is empty");
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i]))
            throw std::invalid_argument("non-finite sample at index " + std::to_string(i));
    }
}

namespace dsp {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace {

void fft_radix2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // Twiddles computed directly per index; recurrences drift at N = 65536.
        std::vector<cplx> tw(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            tw[k] = {std::cos(ang), std::sin(ang)};
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * tw[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

void dft_direct(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            // (k*t) mod n keeps the angle argument small for long inputs
            const std::size_t idx = (k * t) % n;
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(idx) / static_cast<double>(n);
            acc += a[t] * cplx{std::cos(ang), std::sin(ang)};
        }
        out[k] = acc;
    }
    a = std::move(out);
}

}  // namespace

void transform(std::vector<cplx>& data, bool inverse) {
    if (data.empty()) throw std::invalid_argument("dft of empty input");
    if (is_power_of_two(data.size()))
        fft_radix2(data, inverse);
    else
        dft_direct(data, inverse);
}

std::vector<cplx> dft(std::span<const cplx> x) {
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

std::vector<cplx> dft(std::span<const double> x) {
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

std::vector<cplx> idft(std::span<const cplx> spectrum) {
    std::vector<cplx> a(spectrum.begin(), spectrum.end());
    transform(a, true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= scale;
    return a;
}

ComplexSpectrum dft(const AudioClip& clip) {
    clip.validate();
    return {dft(std::span<const double>(clip.samples)), clip.sample_rate, clip.size()};
}

std::vector<double> inverse_dft_real(const ComplexSpectrum& spectrum) {
    auto x = idft(spectrum.bins);
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](const cplx& c) { return c.real(); });
    return out;
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("analytic signal needs at least 4 samples");
    auto spec = dft(x);
    // DC (and Nyquist for even n) keep unit weight; positive bins doubled; negative zeroed.
    const std::size_t pos_end = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
    for (std::size_t k = 1; k < pos_end; ++k) spec[k] *= 2.0;
    for (std::size_t k = (n % 2 == 0 ? n / 2 + 1 : pos_end); k < n; ++k) spec[k] = 0.0;
    return idft(spec);
}

std::vector<cplx> analytic_signal(const AudioClip& clip) {
    clip.validate();
    return analytic_signal(std::span<const double>(clip.samples));
}

std::vector<double> hilbert_envelope(std::span<const double> x) {
    auto a = analytic_signal(x);
    std::vector<double> env(a.size());
    std::transform(a.begin(), a.end(), env.begin(), [](const cplx& c) { return std::abs(c); });
    return env;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges_hz(int n_bands, int sample_rate) {
    const double top = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(n_bands) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_bands + 1));
    return edges;
}

}  // namespace

std::vector<double> mel_band_centers(int n_bands, int sample_rate) {
    auto edges = mel_edges_hz(n_bands, sample_rate);
    return {edges.begin() + 1, edges.end() - 1};
}

std::vector<double> mel_filterbank(int n_bands, int frame_len, int sample_rate) {
    if (n_bands < 1) throw std::invalid_argument("n_bands must be >= 1");
    if (frame_len < 2) throw std::invalid_argument("frame_len must be >= 2");
    const std::size_t n_bins = static_cast<std::size_t>(frame_len) / 2 + 1;
    const auto edges = mel_edges_hz(n_bands, sample_rate);
    std::vector<double> fb(static_cast<std::size_t>(n_bands) * n_bins, 0.0);
    for (int b = 0; b < n_bands; ++b) {
        const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        double* row = fb.data() + static_cast<std::size_t>(b) * n_bins;
        double total = 0.0;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / frame_len;
            double w = 0.0;
            if (f > lo && f <= mid)
                w = (f - lo) / (mid - lo);
            else if (f > mid && f < hi)
                w = (hi - f) / (hi - mid);
            row[k] = w;
            total += w;
        }
        if (total <= 0.0) {
            // Band narrower than a bin: take the bin nearest the center.
            auto k = static_cast<std::size_t>(std::lround(mid * frame_len / sample_rate));
            row[std::min(k, n_bins - 1)] = 1.0;
            total = 1.0;
        }
        for (std::size_t k = 0; k < n_bins; ++k) row[k] /= total;
    }
    return fb;
}

std::vector<MelFrame> mel_log_energies(const AudioClip& clip, const MelConfig& cfg) {
    clip.validate();
    if (cfg.n_bands < 1) throw std::invalid_argument("n_bands must be >= 1");
    if (cfg.hop < 1) throw std::invalid_argument("hop must be >= 1");
    if (cfg.frame_len < 2) throw std::invalid_argument("frame_len must be >= 2");
    if (static_cast<std::size_t>(cfg.frame_len) > clip.size())
        throw std::invalid_argument("clip shorter than frame_len (" + std::to_string(clip.size()) + " < " +
                                    std::to_string(cfg.frame_len) + ")");
    const std::size_t flen = static_cast<std::size_t>(cfg.frame_len);
    const std::size_t n_bins = flen / 2 + 1;
    const std::size_t n_frames = (clip.size() - flen) / static_cast<std::size_t>(cfg.hop) + 1;
    const auto fb = mel_filterbank(cfg.n_bands, cfg.frame_len, clip.sample_rate);

    std::vector<double> window(flen);
    for (std::size_t i = 0; i < flen; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(flen));

    std::vector<MelFrame> frames(n_frames, MelFrame(static_cast<std::size_t>(cfg.n_bands)));
    std::vector<cplx> buf(flen);
    std::vector<double> power(n_bins);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * static_cast<std::size_t>(cfg.hop);
        for (std::size_t i = 0; i < flen; ++i) buf[i] = clip.samples[start + i] * window[i];
        transform(buf, false);
        for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
        for (int b = 0; b < cfg.n_bands; ++b) {
            const double* row = fb.data() + static_cast<std::size_t>(b) * n_bins;
            double e = 0.0;
            for (std::size_t k = 0; k < n_bins; ++k) e += row[k] * power[k];
            frames[f][static_cast<std::size_t>(b)] = std::log(kMelFloor + e);
        }
    }
    return frames;
}

}  // namespace dsp
}  // namespace swg
