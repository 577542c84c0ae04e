#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "swg/envelope.hpp"

using namespace swg;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

AudioClip tone(std::size_t n, double amp, double hz = 1000.0, double tau = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double decay = tau > 0 ? std::exp(-static_cast<double>(t) / tau) : 1.0;
        x[t] = amp * decay * std::cos(2 * kPi * hz * static_cast<double>(t) / 16000.0);
    }
    return {x, 16000};
}

AudioClip noise_clip(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 0.3);
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return {x, 16000};
}

EnvelopeTable random_env(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EnvelopeTable env;
    env.values.resize(n);
    for (auto& v : env.values) v = u(rng);
    *std::max_element(env.values.begin(), env.values.end()) = 1.0;
    env.values.back() = 0.0;
    return env;
}

}  // namespace

TEST_CASE("drum class names round-trip") {
    for (auto c : {DrumClass::kick, DrumClass::snare, DrumClass::tom, DrumClass::closed_hh, DrumClass::open_hh})
        CHECK(parse_drum_class(to_string(c)) == c);
    CHECK_THROWS(parse_drum_class("cowbell"));
}

TEST_CASE("moving average of a constant is the constant") {
    const std::vector<double> x(50, 2.5);
    for (double v : moving_average(x, 9)) CHECK_THAT(v, WithinAbs(2.5, 1e-15));
    const std::vector<double> ramp{0, 1, 2, 3, 4, 5, 6};
    const auto m = moving_average(ramp, 3);
    for (std::size_t i = 1; i + 1 < ramp.size(); ++i) CHECK_THAT(m[i], WithinAbs(ramp[i], 1e-15));
    CHECK_THAT(m.front(), WithinAbs(0.5, 1e-15));
}

TEST_CASE("constant tone gives a flat envelope") {
    const EnvelopeOptions opts{4096, 65, 256};
    const AudioClip clips[] = {tone(4096, 0.8)};
    const auto env = extract_class_envelope(DrumClass::kick, clips, opts);
    REQUIRE(env.size() == 4096);
    CHECK(env.drum_class == DrumClass::kick);
    for (std::size_t t = 205; t < 4096 - 256; ++t) CHECK_THAT(env.values[t], WithinAbs(1.0, 1e-3));
    CHECK(env.values.back() == 0.0);
}

TEST_CASE("averaging with silence keeps the flat shape") {
    const EnvelopeOptions opts{4096, 65, 256};
    const AudioClip clips[] = {tone(4096, 1.0), AudioClip{std::vector<double>(4096, 0.0), 16000}};
    const auto env = extract_class_envelope(DrumClass::snare, clips, opts);
    for (std::size_t t = 205; t < 4096 - 256; ++t) CHECK_THAT(env.values[t], WithinAbs(1.0, 1e-3));
}

TEST_CASE("decaying tone envelope tracks the decay") {
    const std::size_t n = 8192;
    const double tau = 3000.0;
    const EnvelopeOptions opts{n, 33, 128};
    const AudioClip clips[] = {tone(n, 0.6, 1000.0, tau)};
    const auto env = extract_class_envelope(DrumClass::kick, clips, opts);
    for (std::size_t t = n / 20; t < n - n / 20; ++t) {
        const double expect = std::exp(-static_cast<double>(t) / tau);
        CHECK(std::abs(env.values[t] - expect) / expect < 0.03);
    }
}

TEST_CASE("envelope invariants hold") {
    const EnvelopeOptions opts{2048, 65, 128};
    std::vector<AudioClip> clips;
    for (std::uint64_t s = 0; s < 4; ++s) clips.push_back(noise_clip(1500 + 300 * s, s));
    const auto env = extract_class_envelope(DrumClass::closed_hh, clips, opts);
    REQUIRE(env.size() == 2048);
    for (double v : env.values) CHECK(v >= 0.0);
    CHECK(*std::max_element(env.values.begin(), env.values.end()) == 1.0);
    CHECK(env.values.back() == 0.0);
}

TEST_CASE("envelope is permutation invariant and deterministic") {
    const EnvelopeOptions opts{2048, 65, 128};
    std::vector<AudioClip> clips;
    for (std::uint64_t s = 0; s < 5; ++s) clips.push_back(noise_clip(2048, 40 + s));
    const auto a = extract_class_envelope(DrumClass::tom, clips, opts);
    const auto b = extract_class_envelope(DrumClass::tom, clips, opts);
    CHECK(a.values == b.values);
    std::reverse(clips.begin(), clips.end());
    std::swap(clips[1], clips[3]);
    const auto c = extract_class_envelope(DrumClass::tom, clips, opts);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(c.values[i], WithinAbs(a.values[i], 1e-12));
}

TEST_CASE("envelope extraction rejects bad input") {
    const std::vector<AudioClip> none;
    CHECK_THROWS(extract_class_envelope(DrumClass::kick, none, {}));
    const AudioClip one[] = {tone(256, 1.0)};
    CHECK_THROWS(extract_class_envelope(DrumClass::kick, one, {256, 9, 512}));
    CHECK_THROWS(extract_class_envelope(DrumClass::kick, one, {256, 9, 0}));
}

TEST_CASE("all-ones envelope is the identity") {
    const auto x = noise_clip(512, 1);
    EnvelopeTable ones;
    ones.values.assign(512, 1.0);
    CHECK(apply_envelope(x, ones).samples == x.samples);
}

TEST_CASE("apply_envelope matches the elementwise product") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto x = noise_clip(777, 100 + s);
        const auto env = random_env(777, 200 + s);
        const auto y = apply_envelope(x, env);
        for (std::size_t i = 0; i < x.samples.size(); ++i) {
            CHECK(y.samples[i] == x.samples[i] * env.values[i]);
            CHECK(std::abs(y.samples[i]) <= std::abs(x.samples[i]));
        }
        CHECK(y.samples.back() == 0.0);
    }
}

TEST_CASE("apply_envelope rejects mismatches") {
    const auto x = noise_clip(100, 1);
    CHECK_THROWS(apply_envelope(x, random_env(99, 1)));
    auto env = random_env(100, 2);
    env.sample_rate = 44100;
    CHECK_THROWS(apply_envelope(x, env));
}
