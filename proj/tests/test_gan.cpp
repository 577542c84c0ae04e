#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "swg/gan.hpp"

using namespace swg;
using Catch::Matchers::WithinAbs;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.output_length = 1024;
    c.channels = {8, 8, 4};
    c.disc_channels = {4, 8, 8};
    c.d_z = 16;
    c.d_w = 16;
    c.d_embed = 8;
    c.use_envelope = false;
    return c;
}

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

ConditionVector cond(DrumClass c) {
    ConditionVector v;
    v.label = c;
    v.descriptors = {40, 60, 20};
    v.mask = DescriptorMask::all();
    return v;
}

}  // namespace

TEST_CASE("model config validation") {
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.base_length() == 256);
    CHECK(c.cond_dim() == 3 + 6);
    c.output_length = 1001;
    CHECK_THROWS(c.validate());
    c = small_config();
    c.kernel = 7;
    CHECK_THROWS(c.validate());
    CHECK_THROWS(parse_discriminator_variant("plain"));
}

TEST_CASE("condition encoding is one-hot plus masked descriptors") {
    const auto c = small_config();
    ConditionVector v;
    v.label = DrumClass::snare;
    v.descriptors = {30, 70, 90};
    v.mask = DescriptorMask::only(Descriptor::depth);
    const auto e = v.encode(c);
    const std::vector<double> expect{0, 1, 0, 0, 0.7, 0, 0, 1, 0};
    CHECK(e == expect);
    v.label = DrumClass::tom;
    CHECK_THROWS(v.encode(c));
}

TEST_CASE("mapping is deterministic and sees the label") {
    const auto c = small_config();
    Generator gen(c, 3);
    std::mt19937_64 rng(1);
    const auto z = gen.sample_latent(rng);
    REQUIRE(z.z.size() == 16);
    auto run = [&](DrumClass label) {
        ad::Graph g;
        auto p = bind_constant(g, gen.params());
        auto w = gen.mapping(p, z, cond(label));
        return std::vector<double>(w.value().begin(), w.value().end());
    };
    const auto a = run(DrumClass::kick), b = run(DrumClass::kick), d = run(DrumClass::snare);
    CHECK(a.size() == c.style_dim());
    CHECK(a == b);
    CHECK(a != d);
    CHECK_THROWS(gen.mapping(BoundParams{}, LatentCode{std::vector<double>(3)}, cond(DrumClass::kick)));
}

TEST_CASE("gradient of the squared style norm with respect to z") {
    const auto c = small_config();
    Generator gen(c, 4);
    auto f = [&](ad::Tensor z) {
        auto p = bind_constant(z.graph(), gen.params());
        auto w = gen.mapping(p, z, cond(DrumClass::closed_hh));
        return ad::sum(ad::square(w));
    };
    CHECK(ad::grad_check(f, randn(16, 5), {16}) < 1e-4);
}

TEST_CASE("noise layer with zero gain is identity plus bias") {
    ad::Graph g;
    const std::size_t C = 4, T = 32, S = 6;
    const auto xv = randn(C * T, 1), bias = randn(C, 2);
    auto x = g.constant(xv, {C, T});
    auto y = noise_layer(x, g.constant(randn(S, 3), {S}), g.constant(std::vector<double>(C * S, 0.0), {C, S}),
                         g.constant(std::vector<double>(C, 0.0), {C}), g.constant(bias, {C}), randn(T, 4));
    for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t t = 0; t < T; ++t) CHECK(y.value()[ch * T + t] == xv[ch * T + t] + bias[ch]);

    ad::Graph g2;
    auto y0 = noise_layer(g2.constant(xv, {C, T}), g2.constant(randn(S, 3), {S}), g2.constant(randn(C * S, 5), {C, S}),
                          g2.constant(randn(C, 6), {C}), g2.constant(std::vector<double>(C, 0.0), {C}), randn(T, 4));
    for (std::size_t ch = 0; ch < C; ++ch) CHECK(y0.value()[ch * T + T - 1] == xv[ch * T + T - 1]);
}

TEST_CASE("noise fade runs from one to zero") {
    const auto f = noise_fade(5);
    CHECK(f == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
}

TEST_CASE("noise layer variance follows the shaped gain") {
    const std::size_t C = 3, T = 16, S = 4;
    const auto style = randn(S, 10), gw = randn(C * S, 11), gb = randn(C, 12);
    std::vector<double> gain(C);
    for (std::size_t c = 0; c < C; ++c) {
        gain[c] = gb[c];
        for (std::size_t s = 0; s < S; ++s) gain[c] += gw[c * S + s] * style[s];
    }
    const auto fade = noise_fade(T);
    const int trials = 10000;
    std::vector<double> sum2(C * T, 0.0);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd;
    for (int i = 0; i < trials; ++i) {
        std::vector<double> eta(T);
        for (auto& v : eta) v = nd(rng);
        ad::Graph g;
        auto y = noise_layer(g.constant(std::vector<double>(C * T, 0.0), {C, T}), g.constant(style, {S}),
                             g.constant(gw, {C, S}), g.constant(gb, {C}), g.constant(std::vector<double>(C, 0.0), {C}),
                             eta);
        for (std::size_t k = 0; k < C * T; ++k) sum2[k] += y.value()[k] * y.value()[k];
    }
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t : {0u, 5u, 10u}) {
            const double expect = std::pow(gain[c] * fade[t], 2);
            CHECK(std::abs(sum2[c * T + t] / trials - expect) < 0.05 * expect);
        }
}

TEST_CASE("autofade endpoints and gradients") {
    ad::Graph g;
    const auto xv = randn(20, 1), yv = randn(20, 2);
    auto x = g.variable(xv, {20}), y = g.variable(yv, {20});
    auto a = g.variable({std::numbers::pi / 2}, {1});
    auto out = autofade(x, y, a);
    for (std::size_t i = 0; i < 20; ++i) CHECK(out.value()[i] == xv[i]);
    auto out0 = autofade(x, y, g.constant({0.0}, {1}));
    for (std::size_t i = 0; i < 20; ++i) CHECK(out0.value()[i] == yv[i]);
    CHECK_THROWS(autofade(x, g.constant({1.0}, {1}), a));

    auto f = [&](ad::Tensor alpha) {
        auto& gg = alpha.graph();
        return ad::sum(autofade(gg.constant(xv, {20}), gg.constant(yv, {20}), alpha));
    };
    CHECK(ad::grad_check(f, {0.3}, {1}) < 1e-6);
}

TEST_CASE("autofade preserves variance at pi/4") {
    const std::size_t n = 1000000;
    const auto xv = randn(n, 21), yv = randn(n, 22);
    ad::Graph g;
    auto out = autofade(g.constant(xv, {n}), g.constant(yv, {n}), g.constant({std::numbers::pi / 4}, {1}));
    double m = 0.0, s = 0.0;
    for (double v : out.value()) m += v;
    m /= n;
    for (double v : out.value()) s += (v - m) * (v - m);
    const double var = s / (n - 1);
    CHECK(var > 0.95);
    CHECK(var < 1.05);
}

TEST_CASE("generator output has the configured length") {
    const auto c = small_config();
    Generator gen(c, 7);
    std::mt19937_64 rng(2);
    const auto clip = gen.synthesize(gen.sample_latent(rng), cond(DrumClass::kick), gen.sample_noise(rng));
    CHECK(clip.samples.size() == 1024);
    CHECK(clip.sample_rate == 16000);
    for (double v : clip.samples) CHECK(std::isfinite(v));
}

TEST_CASE("generator is causal in its learned input") {
    const auto c = small_config();
    Generator gen(c, 8);
    std::mt19937_64 rng(3);
    const auto z = gen.sample_latent(rng);
    const auto ref = gen.synthesize(z, cond(DrumClass::snare), gen.zero_noise());
    const std::size_t cut = 100, up = 4;  // two upsampling stages
    auto& in = gen.params().get("g.const");
    const std::size_t len = c.base_length();
    for (std::size_t ch = 0; ch < in.shape[0]; ++ch)
        for (std::size_t t = cut; t < len; ++t) in.value[ch * len + t] = 0.0;
    const auto cut_out = gen.synthesize(z, cond(DrumClass::snare), gen.zero_noise());
    for (std::size_t t = 0; t < cut * up; ++t) CHECK(cut_out.samples[t] == ref.samples[t]);
    bool changed = false;
    for (std::size_t t = cut * up; t < 1024; ++t) changed |= cut_out.samples[t] != ref.samples[t];
    CHECK(changed);
}

TEST_CASE("generator output never depends on future noise") {
    const auto c = small_config();
    Generator gen(c, 9);
    std::mt19937_64 rng(4);
    const auto z = gen.sample_latent(rng);
    const auto noise = gen.sample_noise(rng);
    const auto ref = gen.synthesize(z, cond(DrumClass::kick), noise);
    const std::size_t out_cut = 600;
    auto perturbed = noise;
    std::size_t scale = 4;
    for (auto& block : perturbed) {
        for (std::size_t t = out_cut / scale; t < block.size(); ++t) block[t] += 3.0;
        scale /= 2;
    }
    const auto out = gen.synthesize(z, cond(DrumClass::kick), perturbed);
    for (std::size_t t = 0; t < out_cut; ++t) CHECK(out.samples[t] == ref.samples[t]);
}

TEST_CASE("enveloped output ends at zero") {
    auto c = small_config();
    c.use_envelope = true;
    Generator gen(c, 10);
    std::mt19937_64 rng(5);
    CHECK_THROWS(gen.synthesize(gen.sample_latent(rng), cond(DrumClass::kick), gen.sample_noise(rng)));
    for (auto cls : c.classes) {
        EnvelopeTable env;
        env.drum_class = cls;
        env.values.assign(1024, 1.0);
        env.values.back() = 0.0;
        gen.envelopes().push_back(env);
    }
    for (auto cls : c.classes) {
        const auto clip = gen.synthesize(gen.sample_latent(rng), cond(cls), gen.sample_noise(rng));
        CHECK(clip.samples.back() == 0.0);
    }
}

TEST_CASE("discriminator is deterministic and checks its input") {
    const auto c = small_config();
    Discriminator disc(c, 11);
    const AudioClip x{randn(1024, 6), 16000};
    CHECK(disc.score(x, cond(DrumClass::kick)) == disc.score(x, cond(DrumClass::kick)));
    CHECK(disc.score(x, cond(DrumClass::kick)) != disc.score(x, cond(DrumClass::snare)));
    CHECK_THROWS(disc.score(AudioClip{randn(512, 6), 16000}, cond(DrumClass::kick)));
}

TEST_CASE("autofade at zero equals the bypass-only network") {
    const auto c = small_config();
    Discriminator disc(c, 12);
    for (std::size_t b = 0; b < c.disc_channels.size(); ++b)
        disc.params().get("d.b" + std::to_string(b) + ".alpha").value[0] = 0.0;
    const AudioClip x{randn(1024, 7), 16000};
    const double faded = disc.score(x, cond(DrumClass::closed_hh));
    disc.set_variant(DiscriminatorVariant::bypass_only);
    CHECK(disc.score(x, cond(DrumClass::closed_hh)) == faded);
    disc.set_variant(DiscriminatorVariant::residual);
    CHECK(disc.score(x, cond(DrumClass::closed_hh)) != faded);
}

TEST_CASE("discriminator input gradient passes a single-precision check") {
    const auto c = small_config();
    Discriminator disc(c, 13);
    auto f = [&](ad::Tensor x) {
        auto p = bind_constant(x.graph(), disc.params());
        return disc.forward(p, x, cond(DrumClass::kick));
    };
    std::vector<double> x = randn(1024, 8);
    for (auto& v : x) v *= 0.3;
    CHECK(ad::grad_check(f, x, {1024}, 1e-6) < 1e-3);
}

TEST_CASE("WGAN-LP loss arithmetic") {
    const std::vector<double> fake{1, 3}, real{2, 2}, norms{1.5, 0.5};
    const auto l = wgan_lp_loss(real, fake, norms, 10.0);
    CHECK_THAT(l.d_loss, WithinAbs(1.25, 1e-15));
    CHECK_THAT(l.g_loss, WithinAbs(-2.0, 1e-15));
    CHECK_THAT(l.penalty, WithinAbs(0.125, 1e-15));

    const auto below = wgan_lp_loss(real, fake, std::vector<double>{0.9, 0.2}, 10.0);
    CHECK(below.penalty == 0.0);
    const auto lower = wgan_lp_loss(real, fake, std::vector<double>{0.1, 0.05}, 10.0);
    CHECK(lower.d_loss == below.d_loss);

    const auto same = wgan_lp_loss(real, real, norms, 10.0);
    CHECK(same.d_loss == 10.0 * same.penalty);
    CHECK(wgan_lp_loss(real, fake, {}, 10.0).penalty == 0.0);
}

TEST_CASE("parameter sets index by name") {
    ParamSet ps;
    ps.add("a", {2}, {1, 2});
    ps.add("b", {3}, {1, 2, 3});
    CHECK(ps.count() == 5);
    CHECK(ps.index("b") == 1);
    CHECK(ps.contains("a"));
    CHECK_THROWS(ps.get("c"));
    CHECK_THROWS(ps.add("a", {1}, {0}));
}
