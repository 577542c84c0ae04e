#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace swg {

using cplx = std::complex<double>;

/// Mono waveform with its sample rate. Samples are nominally in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 16000;

    AudioClip() = default;
    AudioClip(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

    std::size_t size() const noexcept { return samples.size(); }
    double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }

    /// Throws std::invalid_argument when empty, non-finite or with a non-positive rate.
    void validate() const;
};

struct ComplexSpectrum {
    std::vector<cplx> bins;
    int sample_rate = 0;
    std::size_t source_length = 0;
};

namespace dsp {

bool is_power_of_two(std::size_t n) noexcept;

/// In-place transform. Radix-2 for power-of-two lengths, direct O(N^2) sum otherwise.
/// The inverse is unnormalized (no 1/N), so transform(transform(x), inverse) = N x.
void transform(std::vector<cplx>& data, bool inverse);

std::vector<cplx> dft(std::span<const cplx> x);
std::vector<cplx> dft(std::span<const double> x);
/// Normalized inverse (includes the 1/N factor).
std::vector<cplx> idft(std::span<const cplx> spectrum);

ComplexSpectrum dft(const AudioClip& clip);
/// Real part of the normalized inverse; source_length samples.
std::vector<double> inverse_dft_real(const ComplexSpectrum& spectrum);

/// DFT-based analytic signal. Requires at least 4 samples.
std::vector<cplx> analytic_signal(std::span<const double> x);
std::vector<cplx> analytic_signal(const AudioClip& clip);

/// |analytic_signal(x)|
std::vector<double> hilbert_envelope(std::span<const double> x);

struct MelConfig {
    int n_bands = 32;
    int frame_len = 1024;
    int hop = 512;
};

inline constexpr double kMelFloor = 1e-10;

using MelFrame = std::vector<double>;

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Triangular HTK-mel filters over the frame_len/2+1 power bins, 0 Hz to Nyquist,
/// each row normalized to unit sum. Row-major n_bands x (frame_len/2+1).
std::vector<double> mel_filterbank(int n_bands, int frame_len, int sample_rate);

/// Center frequency (Hz) of each band.
std::vector<double> mel_band_centers(int n_bands, int sample_rate);

/// Hann-windowed frames, log(1e-10 + band power) per band.
std::vector<MelFrame> mel_log_energies(const AudioClip& clip, const MelConfig& cfg);

}  // namespace dsp
}  // namespace swg
