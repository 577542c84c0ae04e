#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "swg/dsp.hpp"

using namespace swg;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_signal(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// O(N^2) reference, written independently of the library transform.
std::vector<cplx> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double a = -2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * cplx(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

double max_rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff / scale;
}

}  // namespace

TEST_CASE("dft of a unit impulse is flat") {
    const std::vector<double> x{1, 0, 0, 0};
    for (const auto& b : dsp::dft(std::span<const double>(x))) {
        CHECK_THAT(b.real(), WithinAbs(1.0, 1e-15));
        CHECK_THAT(b.imag(), WithinAbs(0.0, 1e-15));
    }
}

TEST_CASE("dft of a cosine has two bins of height N/2") {
    const std::size_t n = 64;
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2 * kPi * 4 * t / n);
    const auto X = dsp::dft(std::span<const double>(x));
    for (std::size_t k = 0; k < n; ++k) {
        const double expect = (k == 4 || k == 60) ? 32.0 : 0.0;
        CHECK_THAT(std::abs(X[k]), WithinAbs(expect, 1e-9));
    }
}

TEST_CASE("dft matches the brute-force transform") {
    for (std::size_t n : {128u, 100u, 37u, 1u}) {
        const auto x = random_signal(n, 3 + static_cast<unsigned>(n));
        CHECK(max_rel_diff(dsp::dft(std::span<const double>(x)), naive_dft(x)) < 1e-9);
    }
}

TEST_CASE("dft round trip and Parseval") {
    for (std::size_t n : {256u, 96u}) {
        const AudioClip clip{random_signal(n, 11), 16000};
        const auto spec = dsp::dft(clip);
        REQUIRE(spec.bins.size() == n);
        REQUIRE(spec.source_length == n);
        const auto back = dsp::inverse_dft_real(spec);
        for (std::size_t i = 0; i < n; ++i) CHECK_THAT(back[i], WithinAbs(clip.samples[i], 1e-9));

        double et = 0.0, ef = 0.0;
        for (double v : clip.samples) et += v * v;
        for (const auto& b : spec.bins) ef += std::norm(b);
        CHECK(std::abs(et - ef / static_cast<double>(n)) / et < 1e-9);

        // conjugate symmetry of a real input
        for (std::size_t k = 1; k < n; ++k) CHECK(std::abs(spec.bins[k] - std::conj(spec.bins[n - k])) < 1e-9);
    }
}

TEST_CASE("dft rejects empty input") {
    const std::vector<double> empty;
    CHECK_THROWS(dsp::dft(std::span<const double>(empty)));
    CHECK_THROWS(dsp::dft(AudioClip{}));
}

TEST_CASE("analytic signal of a tone has constant magnitude") {
    const std::size_t n = 256;
    for (double a : {1.0, 0.5}) {
        std::vector<double> x(n);
        for (std::size_t t = 0; t < n; ++t) x[t] = a * std::cos(2 * kPi * 8 * t / n);
        const auto z = dsp::analytic_signal(x);
        for (std::size_t t = 0; t < n; ++t) {
            CHECK_THAT(std::abs(z[t]), WithinAbs(a, 1e-6));
            CHECK_THAT(z[t].real(), WithinAbs(x[t], 1e-9));
        }
    }
}

TEST_CASE("analytic magnitude tracks an AM envelope") {
    const std::size_t n = 4096;
    std::vector<double> x(n), env(n);
    for (std::size_t t = 0; t < n; ++t) {
        env[t] = 1.0 + 0.5 * std::cos(2 * kPi * 4 * t / n);
        x[t] = env[t] * std::cos(2 * kPi * 400 * t / n);
    }
    const auto h = dsp::hilbert_envelope(x);
    for (std::size_t t = n / 20; t < n - n / 20; ++t) CHECK(std::abs(h[t] - env[t]) / env[t] < 0.02);
}

TEST_CASE("analytic signal is linear and real-preserving") {
    const auto x = random_signal(200, 1), y = random_signal(200, 2);
    std::vector<double> mix(200);
    const double a = 0.7, b = -1.3;
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
    const auto zx = dsp::analytic_signal(x), zy = dsp::analytic_signal(y), zm = dsp::analytic_signal(mix);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        CHECK(std::abs(zm[i] - (a * zx[i] + b * zy[i])) < 1e-9);
        CHECK_THAT(zm[i].real(), WithinAbs(mix[i], 1e-9));
    }
}

TEST_CASE("analytic signal needs four samples") {
    const std::vector<double> x{1, 2, 3};
    CHECK_THROWS(dsp::analytic_signal(x));
}

TEST_CASE("mel energies of silence sit at the floor") {
    const AudioClip clip{std::vector<double>(4096, 0.0), 16000};
    const auto frames = dsp::mel_log_energies(clip, {});
    REQUIRE(frames.size() == (4096 - 1024) / 512 + 1);
    for (const auto& f : frames) {
        REQUIRE(f.size() == 32);
        for (double v : f) CHECK_THAT(v, WithinAbs(std::log(1e-10), 1e-12));
    }
}

TEST_CASE("mel peak band holds a 1 kHz tone") {
    std::vector<double> x(8192);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2 * kPi * 1000.0 * t / 16000.0);
    const auto frames = dsp::mel_log_energies({x, 16000}, {});
    const auto centers = dsp::mel_band_centers(32, 16000);
    std::size_t nearest = 0;
    for (std::size_t b = 1; b < centers.size(); ++b)
        if (std::abs(centers[b] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = b;
    for (const auto& f : frames) {
        const auto peak = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
        CHECK(peak == nearest);
    }
}

TEST_CASE("mel bands of white noise are roughly flat") {
    const std::size_t frames_wanted = 100;
    const std::size_t n = 1024 + (frames_wanted - 1) * 512;
    const auto frames = dsp::mel_log_energies({random_signal(n, 5), 16000}, {});
    REQUIRE(frames.size() == frames_wanted);
    std::vector<double> mean(32, 0.0);
    for (const auto& f : frames)
        for (std::size_t b = 0; b < 32; ++b) mean[b] += f[b] / static_cast<double>(frames.size());
    // 6 dB in power is a factor of ~3.98, i.e. ln(3.98) in natural-log energy
    const double spread = *std::max_element(mean.begin(), mean.end()) - *std::min_element(mean.begin(), mean.end());
    CHECK(spread < std::log(std::pow(10.0, 0.6)));
}

TEST_CASE("mel frames shift with the input by whole hops") {
    const dsp::MelConfig cfg{16, 256, 128};
    const auto x = random_signal(4096, 9);
    std::vector<double> shifted(128, 0.0);
    shifted.insert(shifted.end(), x.begin(), x.end() - 128);
    const auto a = dsp::mel_log_energies({x, 16000}, cfg);
    const auto b = dsp::mel_log_energies({shifted, 16000}, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t f = 1; f + 1 < a.size(); ++f)
        for (std::size_t k = 0; k < a[f].size(); ++k) CHECK_THAT(b[f + 1][k], WithinAbs(a[f][k], 1e-9));
}

TEST_CASE("mel energies reject clips shorter than a frame") {
    CHECK_THROWS(dsp::mel_log_energies({std::vector<double>(100, 0.1), 16000}, {}));
}

TEST_CASE("AudioClip validation") {
    CHECK_THROWS(AudioClip{}.validate());
    CHECK_THROWS(AudioClip({1.0}, 0).validate());
    CHECK_THROWS(AudioClip({1.0, std::nan("")}, 16000).validate());
    CHECK_NOTHROW(AudioClip({0.1}, 8000).validate());
}
