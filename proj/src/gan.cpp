#include "swg/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swg {

std::string to_string(DiscriminatorVariant v) {
    switch (v) {
        case DiscriminatorVariant::autofade: return "autofade";
        case DiscriminatorVariant::residual: return "residual";
        case DiscriminatorVariant::bypass_only: return "bypass_only";
    }
    return "?";
}

DiscriminatorVariant parse_discriminator_variant(const std::string& s) {
    if (s == "autofade") return DiscriminatorVariant::autofade;
    if (s == "residual") return DiscriminatorVariant::residual;
    if (s == "bypass_only") return DiscriminatorVariant::bypass_only;
    throw std::invalid_argument("unknown discriminator variant '" + s + "'");
}

// ---------------------------------------------------------------------------
// ModelConfig / ConditionVector

std::size_t ModelConfig::base_length() const {
    if (channels.empty()) throw std::invalid_argument("model needs at least one synthesis block");
    const std::size_t factor = std::size_t{1} << (channels.size() - 1);
    return static_cast<std::size_t>(output_length) / factor;
}

std::size_t ModelConfig::cond_dim() const noexcept {
    return classes.size() + (use_descriptors ? 2 * kNumDescriptors : 0);
}

std::size_t ModelConfig::class_slot(DrumClass c) const {
    auto it = std::find(classes.begin(), classes.end(), c);
    if (it == classes.end()) throw std::invalid_argument("class " + to_string(c) + " is not part of the model");
    return static_cast<std::size_t>(it - classes.begin());
}

void ModelConfig::validate() const {
    if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
    if (channels.empty() || disc_channels.empty()) throw std::invalid_argument("channel lists must be non-empty");
    for (int c : channels)
        if (c < 1) throw std::invalid_argument("channel counts must be >= 1");
    for (int c : disc_channels)
        if (c < 1) throw std::invalid_argument("discriminator channel counts must be >= 1");
    const std::size_t factor = std::size_t{1} << (channels.size() - 1);
    if (output_length <= 0 || static_cast<std::size_t>(output_length) % factor != 0)
        throw std::invalid_argument("output_length must equal base_length * 2^(blocks - 1)");
    if (static_cast<std::size_t>(output_length) % (std::size_t{1} << disc_channels.size()) != 0)
        throw std::invalid_argument("output_length must be divisible by 2^(discriminator blocks)");
    if (kernel != 9) throw std::invalid_argument("kernel length is fixed at 9");
    if (mapping_layers < 1) throw std::invalid_argument("mapping_layers must be >= 1");
    if (d_z < 1 || d_w < 1 || d_embed < 1) throw std::invalid_argument("latent/style/embedding dims must be >= 1");
    if (classes.empty()) throw std::invalid_argument("model needs at least one class");
    if (use_descriptors && static_cast<std::size_t>(output_length) < kMinDescriptorLength)
        throw std::invalid_argument("output too short for descriptors");
}

std::vector<double> ConditionVector::encode(const ModelConfig& cfg) const {
    std::vector<double> v(cfg.cond_dim(), 0.0);
    v[cfg.class_slot(label)] = 1.0;
    if (cfg.use_descriptors) {
        const std::size_t off = cfg.classes.size();
        for (auto d : kAllDescriptors) {
            const auto i = static_cast<std::size_t>(d);
            if (mask[d]) {
                v[off + i] = descriptors[d] / 100.0;
                v[off + kNumDescriptors + i] = 1.0;
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// ParamSet

ad::Param& ParamSet::add(std::string name, ad::Shape shape, std::vector<double> init) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_[name] = params_.size();
    params_.emplace_back(std::move(name), std::move(shape), std::move(init));
    return params_.back();
}

ad::Param& ParamSet::get(const std::string& name) { return params_[index(name)]; }
const ad::Param& ParamSet::get(const std::string& name) const { return params_[index(name)]; }
bool ParamSet::contains(const std::string& name) const { return index_.contains(name); }

std::size_t ParamSet::index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("no parameter named " + name);
    return it->second;
}

std::size_t ParamSet::count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

BoundParams bind(ad::Graph& g, ParamSet& params, bool trainable) {
    BoundParams b;
    b.tensors.reserve(params.size());
    for (auto& p : params.all()) b.tensors.push_back(g.parameter(p, trainable));
    return b;
}

BoundParams bind_constant(ad::Graph& g, const ParamSet& params) {
    BoundParams b;
    b.tensors.reserve(params.size());
    for (const auto& p : params.all()) b.tensors.push_back(g.constant(p.value, p.shape));
    return b;
}

// ---------------------------------------------------------------------------
// Layers

std::vector<double> noise_fade(std::size_t len) {
    std::vector<double> g(len, 0.0);
    if (len < 2) return g;
    for (std::size_t t = 0; t < len; ++t) g[t] = 1.0 - static_cast<double>(t) / static_cast<double>(len - 1);
    return g;
}

ad::Tensor noise_layer(const ad::Tensor& x, const ad::Tensor& style, const ad::Tensor& gain_w,
                       const ad::Tensor& gain_b, const ad::Tensor& bias, std::span<const double> eta) {
    if (x.shape().size() != 2 || x.shape()[1] != eta.size())
        throw std::invalid_argument("noise_layer: noise length " + std::to_string(eta.size()) +
                                    " does not match input " + ad::shape_str(x.shape()));
    const auto fade = noise_fade(eta.size());
    std::vector<double> shaped(eta.size());
    for (std::size_t t = 0; t < eta.size(); ++t) shaped[t] = fade[t] * eta[t];
    auto gain = ad::affine(style, gain_w, gain_b);
    auto n = x.graph().constant(std::move(shaped), {eta.size()});
    return ad::add_rows(ad::add(x, ad::outer(gain, n)), bias);
}

namespace {

// cos(pi/2) evaluates to 6e-17 in double; flushing keeps the fade endpoints
// exact. The derivative passes through unchanged.
ad::Tensor flush_tiny(const ad::Tensor& w) {
    double v = w.item();
    if (std::abs(v) < 1e-15) v = 0.0;
    auto& g = w.graph();
    const std::size_t id = w.id();
    return g.record({1}, {v}, {w}, [&g, id](std::span<const double> gy) { g.grad_buffer(id)[0] += gy[0]; });
}

}  // namespace

ad::Tensor autofade(const ad::Tensor& x, const ad::Tensor& y, const ad::Tensor& alpha) {
    if (x.shape() != y.shape())
        throw std::invalid_argument("autofade: shape mismatch " + ad::shape_str(x.shape()) + " vs " +
                                    ad::shape_str(y.shape()));
    if (alpha.size() != 1) throw std::invalid_argument("autofade: alpha must be a scalar");
    return ad::add(ad::mul(flush_tiny(ad::sin(alpha)), x), ad::mul(flush_tiny(ad::cos(alpha)), y));
}

namespace {

std::vector<double> normal_init(std::mt19937_64& rng, std::size_t n, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

std::vector<double> filled(std::size_t n, double value) { return std::vector<double>(n, value); }

void check_finite(const ad::Tensor& t, const std::string& where) {
    for (double v : t.value())
        if (!std::isfinite(v)) throw std::runtime_error("non-finite activation in " + where);
}

std::string gname(std::size_t block, const char* part) { return "g.b" + std::to_string(block) + "." + part; }
std::string dname(std::size_t block, const char* part) { return "d.b" + std::to_string(block) + "." + part; }

}  // namespace

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t cond = cfg_.cond_dim();
    const auto de = static_cast<std::size_t>(cfg_.d_embed);
    const auto dw = static_cast<std::size_t>(cfg_.d_w);
    const auto k = static_cast<std::size_t>(cfg_.kernel);
    const std::size_t style = cfg_.style_dim();

    params_.add("g.embed.w", {de, cond}, normal_init(rng, de * cond, 1.0 / std::sqrt(static_cast<double>(cond))));
    params_.add("g.embed.b", {de}, filled(de, 0.0));
    std::size_t in = static_cast<std::size_t>(cfg_.d_z) + de;
    for (int l = 0; l < cfg_.mapping_layers; ++l) {
        const std::string base = "g.map" + std::to_string(l);
        params_.add(base + ".w", {dw, in}, normal_init(rng, dw * in, std::sqrt(2.0 / static_cast<double>(in))));
        params_.add(base + ".b", {dw}, filled(dw, 0.0));
        in = dw;
    }
    const auto c0 = static_cast<std::size_t>(cfg_.channels.front());
    const std::size_t base_len = cfg_.base_length();
    params_.add("g.const", {c0, base_len}, normal_init(rng, c0 * base_len, 1.0));

    for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
        const auto cin = static_cast<std::size_t>(b == 0 ? cfg_.channels[0] : cfg_.channels[b - 1]);
        const auto cout = static_cast<std::size_t>(cfg_.channels[b]);
        const double sstd = 1.0 / std::sqrt(static_cast<double>(style));
        params_.add(gname(b, "mod.w"), {cin, style}, normal_init(rng, cin * style, 0.25 * sstd));
        params_.add(gname(b, "mod.b"), {cin}, filled(cin, 1.0));
        params_.add(gname(b, "conv.w"), {cout, cin, k},
                    normal_init(rng, cout * cin * k, std::sqrt(2.0 / static_cast<double>(cin * k))));
        params_.add(gname(b, "conv.b"), {cout}, filled(cout, 0.0));
        params_.add(gname(b, "noise.w"), {cout, style}, normal_init(rng, cout * style, 0.1 * sstd));
        params_.add(gname(b, "noise.b"), {cout}, filled(cout, 0.1));
        params_.add(gname(b, "bias"), {cout}, filled(cout, 0.0));
        params_.add(gname(b, "out.w"), {1, cout, 1},
                    normal_init(rng, cout, 0.2 / std::sqrt(static_cast<double>(cout))));
        params_.add(gname(b, "out.b"), {1}, filled(1, 0.0));
    }
}

LatentCode Generator::sample_latent(std::mt19937_64& rng) const {
    std::normal_distribution<double> dist(0.0, 1.0);
    LatentCode z;
    z.z.resize(static_cast<std::size_t>(cfg_.d_z));
    for (auto& v : z.z) v = dist(rng);
    return z;
}

BlockNoise Generator::sample_noise(std::mt19937_64& rng) const {
    std::normal_distribution<double> dist(0.0, 1.0);
    BlockNoise n(cfg_.num_blocks());
    std::size_t len = cfg_.base_length();
    for (auto& block : n) {
        block.resize(len);
        for (auto& v : block) v = dist(rng);
        len *= 2;
    }
    return n;
}

BlockNoise Generator::zero_noise() const {
    BlockNoise n(cfg_.num_blocks());
    std::size_t len = cfg_.base_length();
    for (auto& block : n) {
        block.assign(len, 0.0);
        len *= 2;
    }
    return n;
}

ad::Tensor Generator::mapping(const BoundParams& p, const LatentCode& z, const ConditionVector& cond) const {
    if (z.z.size() != static_cast<std::size_t>(cfg_.d_z))
        throw std::invalid_argument("latent has dimension " + std::to_string(z.z.size()) + ", expected " +
                                    std::to_string(cfg_.d_z));
    return mapping(p, p[0].graph().constant(z.z, {z.z.size()}), cond);
}

ad::Tensor Generator::mapping(const BoundParams& p, const ad::Tensor& z, const ConditionVector& cond) const {
    if (z.shape() != ad::Shape{static_cast<std::size_t>(cfg_.d_z)})
        throw std::invalid_argument("latent has shape " + ad::shape_str(z.shape()) + ", expected [" +
                                    std::to_string(cfg_.d_z) + "]");
    auto& g = p[0].graph();
    auto c = g.constant(cond.encode(cfg_), {cfg_.cond_dim()});
    auto embed = ad::affine(c, p[params_.index("g.embed.w")], p[params_.index("g.embed.b")]);
    auto h = ad::concat(z, embed);
    for (int l = 0; l < cfg_.mapping_layers; ++l) {
        const std::string base = "g.map" + std::to_string(l);
        h = ad::leaky_relu(ad::affine(h, p[params_.index(base + ".w")], p[params_.index(base + ".b")]), 0.2);
    }
    return ad::concat(h, embed);
}

ad::Tensor Generator::forward(const BoundParams& p, const LatentCode& z, const ConditionVector& cond,
                              const BlockNoise& noise) const {
    if (noise.size() != cfg_.num_blocks()) throw std::invalid_argument("noise must hold one sequence per block");
    if (cfg_.use_envelope && envelopes_.size() != cfg_.classes.size())
        throw std::invalid_argument("generator has use_envelope set but no envelope for every class");
    auto style = mapping(p, z, cond);
    ad::Tensor x = p[params_.index("g.const")];
    ad::Tensor out;
    for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
        if (b > 0) {
            x = ad::avg_upsample2x(x);
            out = ad::avg_upsample2x(out);
        }
        auto s = ad::affine(style, p[params_.index(gname(b, "mod.w"))], p[params_.index(gname(b, "mod.b"))]);
        x = ad::mul_rows(x, s);
        x = ad::causal_conv1d(x, p[params_.index(gname(b, "conv.w"))], p[params_.index(gname(b, "conv.b"))]);
        x = noise_layer(x, style, p[params_.index(gname(b, "noise.w"))], p[params_.index(gname(b, "noise.b"))],
                        p[params_.index(gname(b, "bias"))], noise[b]);
        x = ad::leaky_relu(x, 0.2);
        check_finite(x, "generator block " + std::to_string(b));
        auto y = ad::causal_conv1d(x, p[params_.index(gname(b, "out.w"))], p[params_.index(gname(b, "out.b"))]);
        out = out.valid() ? ad::add(out, y) : y;
    }
    auto audio = ad::reshape(out, {static_cast<std::size_t>(cfg_.output_length)});
    if (cfg_.use_envelope) {
        const auto& env = envelopes_[cfg_.class_slot(cond.label)];
        if (env.size() != audio.size()) throw std::invalid_argument("envelope length does not match output length");
        audio = ad::mul(audio, audio.graph().constant(env.values, {env.size()}));
    }
    check_finite(audio, "generator output");
    return audio;
}

AudioClip Generator::synthesize(const LatentCode& z, const ConditionVector& cond, const BlockNoise& noise) const {
    ad::Graph g;
    auto p = bind_constant(g, params_);
    auto y = forward(p, z, cond, noise);
    return {{y.value().begin(), y.value().end()}, cfg_.sample_rate};
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const auto k = static_cast<std::size_t>(cfg_.kernel);
    const auto& dc = cfg_.disc_channels;
    const auto c0 = static_cast<std::size_t>(dc.front());
    params_.add("d.from.w", {c0, 1, k}, normal_init(rng, c0 * k, std::sqrt(2.0 / static_cast<double>(k))));
    params_.add("d.from.b", {c0}, filled(c0, 0.0));
    for (std::size_t b = 0; b < dc.size(); ++b) {
        const auto cin = static_cast<std::size_t>(dc[b]);
        const auto cout = static_cast<std::size_t>(dc[std::min(b + 1, dc.size() - 1)]);
        params_.add(dname(b, "conv1.w"), {cin, cin, k},
                    normal_init(rng, cin * cin * k, std::sqrt(2.0 / static_cast<double>(cin * k))));
        params_.add(dname(b, "conv1.b"), {cin}, filled(cin, 0.0));
        params_.add(dname(b, "conv2.w"), {cout, cin, k},
                    normal_init(rng, cout * cin * k, std::sqrt(2.0 / static_cast<double>(cin * k))));
        params_.add(dname(b, "conv2.b"), {cout}, filled(cout, 0.0));
        params_.add(dname(b, "skip.w"), {cout, cin, 1},
                    normal_init(rng, cout * cin, std::sqrt(1.0 / static_cast<double>(cin))));
        params_.add(dname(b, "alpha"), {1}, filled(1, cfg_.autofade_init));
    }
    const std::size_t cl = static_cast<std::size_t>(dc.back());
    const std::size_t cond = cfg_.cond_dim();
    const auto de = static_cast<std::size_t>(cfg_.d_embed);
    params_.add("d.cond.w", {de, cond}, normal_init(rng, de * cond, 1.0 / std::sqrt(static_cast<double>(cond))));
    params_.add("d.cond.b", {de}, filled(de, 0.0));
    params_.add("d.fc.w", {cl, cl + de}, normal_init(rng, cl * (cl + de), std::sqrt(2.0 / static_cast<double>(cl + de))));
    params_.add("d.fc.b", {cl}, filled(cl, 0.0));
    params_.add("d.out.w", {1, cl}, normal_init(rng, cl, 1.0 / std::sqrt(static_cast<double>(cl))));
    params_.add("d.out.b", {1}, filled(1, 0.0));
}

ad::Tensor Discriminator::forward(const BoundParams& p, const ad::Tensor& audio, const ConditionVector& cond) const {
    const auto len = static_cast<std::size_t>(cfg_.output_length);
    if (audio.size() != len)
        throw std::invalid_argument("discriminator input has " + std::to_string(audio.size()) + " samples, expected " +
                                    std::to_string(len));
    const auto& dc = cfg_.disc_channels;
    ad::Tensor none;
    auto h = ad::reshape(audio, {1, len});
    h = ad::leaky_relu(ad::causal_conv1d(h, p[params_.index("d.from.w")], p[params_.index("d.from.b")]), 0.2);
    for (std::size_t b = 0; b < dc.size(); ++b) {
        auto bypass = ad::causal_conv1d(ad::avg_downsample2x(h), p[params_.index(dname(b, "skip.w"))], none);
        if (cfg_.disc_variant == DiscriminatorVariant::bypass_only) {
            h = bypass;
        } else {
            auto a = ad::leaky_relu(
                ad::causal_conv1d(h, p[params_.index(dname(b, "conv1.w"))], p[params_.index(dname(b, "conv1.b"))]), 0.2);
            a = ad::leaky_relu(
                ad::causal_conv1d(a, p[params_.index(dname(b, "conv2.w"))], p[params_.index(dname(b, "conv2.b"))]), 0.2);
            a = ad::avg_downsample2x(a);
            if (cfg_.disc_variant == DiscriminatorVariant::autofade)
                h = autofade(a, bypass, p[params_.index(dname(b, "alpha"))]);
            else
                h = ad::scale(ad::add(a, bypass), 1.0 / std::numbers::sqrt2);
        }
        check_finite(h, "discriminator block " + std::to_string(b));
    }
    auto& g = audio.graph();
    auto feat = ad::mean_time(h);
    auto c = g.constant(cond.encode(cfg_), {cfg_.cond_dim()});
    auto embed = ad::affine(c, p[params_.index("d.cond.w")], p[params_.index("d.cond.b")]);
    auto f = ad::leaky_relu(ad::affine(ad::concat(feat, embed), p[params_.index("d.fc.w")], p[params_.index("d.fc.b")]), 0.2);
    auto score = ad::affine(f, p[params_.index("d.out.w")], p[params_.index("d.out.b")]);
    check_finite(score, "discriminator output");
    return score;
}

double Discriminator::score(const AudioClip& x, const ConditionVector& cond) const {
    ad::Graph g;
    auto p = bind_constant(g, params_);
    return forward(p, g.constant(x.samples, {x.size()}), cond).item();
}

// ---------------------------------------------------------------------------

WganLosses wgan_lp_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                        std::span<const double> interp_grad_norms, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("wgan_lp_loss: lambda must be >= 0");
    if (real_scores.empty() || fake_scores.empty()) throw std::invalid_argument("wgan_lp_loss: empty score list");
    auto avg = [](std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    WganLosses out;
    if (!interp_grad_norms.empty()) {
        double acc = 0.0;
        for (double n : interp_grad_norms) {
            const double excess = std::max(0.0, n - 1.0);
            acc += excess * excess;
        }
        out.penalty = acc / static_cast<double>(interp_grad_norms.size());
    }
    out.d_loss = avg(fake_scores) - avg(real_scores) + lambda * out.penalty;
    out.g_loss = -avg(fake_scores);
    return out;
}

}  // namespace swg
