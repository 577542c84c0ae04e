#include "swg/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swg {

std::string to_string(Descriptor d) {
    switch (d) {
        case Descriptor::brightness: return "brightness";
        case Descriptor::depth: return "depth";
        case Descriptor::warmth: return "warmth";
    }
    return "?";
}

Descriptor parse_descriptor(const std::string& name) {
    for (auto d : kAllDescriptors)
        if (to_string(d) == name) return d;
    throw std::invalid_argument("unknown descriptor '" + name + "'");
}

double DescriptorVector::operator[](Descriptor d) const noexcept {
    switch (d) {
        case Descriptor::brightness: return brightness;
        case Descriptor::depth: return depth;
        case Descriptor::warmth: return warmth;
    }
    return 0.0;
}

double& DescriptorVector::operator[](Descriptor d) noexcept {
    switch (d) {
        case Descriptor::depth: return depth;
        case Descriptor::warmth: return warmth;
        default: return brightness;
    }
}

DescriptorMask DescriptorMask::only(Descriptor d) {
    DescriptorMask m;
    m.on = {false, false, false};
    m.on[static_cast<std::size_t>(d)] = true;
    return m;
}

std::size_t DescriptorMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(on.begin(), on.end(), true));
}

void DescriptorConfig::validate(int sample_rate) const {
    const double nyquist = sample_rate / 2.0;
    if (!(eps > 0.0)) throw std::invalid_argument("descriptor eps must be positive");
    if (!(bright_hi_edge > 0.0 && bright_hi_edge < nyquist))
        throw std::invalid_argument("brightness band edge must lie in (0, nyquist)");
    if (!(depth_lo_edge > 0.0 && depth_lo_edge < nyquist))
        throw std::invalid_argument("depth band edge must lie in (0, nyquist)");
    if (!(warm_lo >= 0.0 && warm_lo < warm_hi && warm_hi < nyquist))
        throw std::invalid_argument("warmth band edges must be increasing and below nyquist");
    if (!(bright_c0 > 0.0 && depth_c1 > 0.0 && warm_c2 > 0.0))
        throw std::invalid_argument("centroid reference frequencies must be positive");
}

namespace descriptors {

namespace {

struct SpectrumStats {
    ad::Tensor log_centroid;  // ln C
    ad::Tensor power;         // floored power, [N/2+1]
    ad::Tensor total;         // sum of floored power
};

SpectrumStats spectrum_stats(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg) {
    if (x.size() < kMinDescriptorLength)
        throw std::invalid_argument("descriptor input needs at least " + std::to_string(kMinDescriptorLength) +
                                    " samples, got " + std::to_string(x.size()));
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    auto& g = x.graph();
    const std::size_t n = x.size();
    auto power = ad::add_scalar(ad::real_dft_power(x), cfg.eps);
    const std::size_t nb = power.size();
    std::vector<double> freqs(nb);
    for (std::size_t k = 0; k < nb; ++k) freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    auto total = ad::sum(power);
    auto weighted = ad::dot(power, g.constant(std::move(freqs), {nb}));
    auto centroid = ad::div(weighted, total);
    return {ad::log(centroid), power, total};
}

ad::Tensor band_ratio(const SpectrumStats& s, std::size_t n, int sample_rate, double lo, double hi) {
    const std::size_t nb = s.power.size();
    std::vector<double> sel(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
        if (f >= lo && f <= hi) sel[k] = 1.0;
    }
    auto band = ad::dot(s.power, s.power.graph().constant(std::move(sel), {nb}));
    return ad::div(band, s.total);
}

ad::Tensor to_scale(const ad::Tensor& arg) { return ad::scale(ad::sigmoid(arg), 100.0); }

}  // namespace

ad::Tensor brightness(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg) {
    auto s = spectrum_stats(x, sample_rate, cfg);
    auto r_hi = band_ratio(s, x.size(), sample_rate, cfg.bright_hi_edge, sample_rate);
    auto arg = ad::add(ad::scale(ad::add_scalar(s.log_centroid, -std::log(cfg.bright_c0)), cfg.bright_a),
                       ad::add_scalar(ad::scale(r_hi, cfg.bright_b), cfg.bright_d));
    return to_scale(arg);
}

ad::Tensor depth(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg) {
    auto s = spectrum_stats(x, sample_rate, cfg);
    auto r_lo = band_ratio(s, x.size(), sample_rate, 0.0, cfg.depth_lo_edge);
    // b ln(c1 / C) = b (ln c1 - ln C)
    auto arg = ad::add(ad::scale(r_lo, cfg.depth_a),
                       ad::scale(ad::add_scalar(ad::neg(s.log_centroid), std::log(cfg.depth_c1)), cfg.depth_b));
    return to_scale(arg);
}

ad::Tensor warmth(const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg) {
    auto s = spectrum_stats(x, sample_rate, cfg);
    auto r_warm = band_ratio(s, x.size(), sample_rate, cfg.warm_lo, cfg.warm_hi);
    auto arg = ad::add(ad::scale(r_warm, cfg.warm_a),
                       ad::scale(ad::add_scalar(ad::neg(s.log_centroid), std::log(cfg.warm_c2)), cfg.warm_b));
    return to_scale(arg);
}

ad::Tensor compute(Descriptor d, const ad::Tensor& x, int sample_rate, const DescriptorConfig& cfg) {
    switch (d) {
        case Descriptor::brightness: return brightness(x, sample_rate, cfg);
        case Descriptor::depth: return depth(x, sample_rate, cfg);
        case Descriptor::warmth: return warmth(x, sample_rate, cfg);
    }
    throw std::invalid_argument("unknown descriptor");
}

ad::Tensor l1_loss(const DescriptorVector& target, const std::array<ad::Tensor, kNumDescriptors>& produced,
                   const DescriptorMask& mask) {
    if (mask.count() == 0) throw std::invalid_argument("descriptor loss needs a non-empty mask");
    ad::Tensor acc;
    for (auto d : kAllDescriptors) {
        if (!mask[d]) continue;
        const auto& p = produced[static_cast<std::size_t>(d)];
        if (!p.valid()) throw std::invalid_argument("masked descriptor " + to_string(d) + " was not produced");
        auto term = ad::abs(ad::add_scalar(p, -target[d]));
        acc = acc.valid() ? ad::add(acc, term) : term;
    }
    return ad::scale(acc, 1.0 / static_cast<double>(mask.count()));
}

}  // namespace descriptors

namespace {

double eval_plain(Descriptor d, const AudioClip& clip, const DescriptorConfig& cfg) {
    ad::Graph g;
    auto x = g.constant(clip.samples, {clip.size()});
    return descriptors::compute(d, x, clip.sample_rate, cfg).item();
}

}  // namespace

double brightness(const AudioClip& clip, const DescriptorConfig& cfg) {
    return eval_plain(Descriptor::brightness, clip, cfg);
}
double depth(const AudioClip& clip, const DescriptorConfig& cfg) { return eval_plain(Descriptor::depth, clip, cfg); }
double warmth(const AudioClip& clip, const DescriptorConfig& cfg) { return eval_plain(Descriptor::warmth, clip, cfg); }

DescriptorVector describe(const AudioClip& clip, const DescriptorConfig& cfg) {
    clip.validate();
    ad::Graph g;
    auto x = g.constant(clip.samples, {clip.size()});
    return {descriptors::brightness(x, clip.sample_rate, cfg).item(), descriptors::depth(x, clip.sample_rate, cfg).item(),
            descriptors::warmth(x, clip.sample_rate, cfg).item()};
}

double descriptor_loss(const DescriptorVector& target, const DescriptorVector& produced, const DescriptorMask& mask) {
    if (mask.count() == 0) throw std::invalid_argument("descriptor loss needs a non-empty mask");
    double acc = 0.0;
    for (auto d : kAllDescriptors)
        if (mask[d]) acc += std::abs(target[d] - produced[d]);
    return acc / static_cast<double>(mask.count());
}

MatchResult match_descriptors(const AudioClip& init, const DescriptorVector& target, const MatchOptions& opts) {
    init.validate();
    if (opts.steps < 1) throw std::invalid_argument("match_descriptors: steps must be >= 1");
    if (!(opts.step_size > 0.0)) throw std::invalid_argument("match_descriptors: step size must be positive");
    if (opts.mask.count() == 0) throw std::invalid_argument("match_descriptors: empty mask");
    opts.config.validate(init.sample_rate);

    const std::size_t n = init.size();
    std::vector<double> x = init.samples;
    std::vector<double> m(n, 0.0), v(n, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    // Loss and gradient at x; only masked descriptors enter the graph.
    auto evaluate = [&](const std::vector<double>& samples, std::vector<double>* grad) {
        ad::Graph g;
        auto t = grad ? g.variable(samples, {n}) : g.constant(samples, {n});
        std::array<ad::Tensor, kNumDescriptors> produced;
        for (auto d : kAllDescriptors)
            if (opts.mask[d])
                produced[static_cast<std::size_t>(d)] = descriptors::compute(d, t, init.sample_rate, opts.config);
        auto loss = descriptors::l1_loss(target, produced, opts.mask);
        if (grad) {
            g.backward(loss);
            auto gr = t.grad();
            grad->assign(n, 0.0);
            std::copy(gr.begin(), gr.end(), grad->begin());
        }
        return loss.item();
    };

    std::vector<double> grad;
    const double initial = evaluate(x, &grad);
    if (!std::isfinite(initial)) throw std::runtime_error("match_descriptors: non-finite loss at step 0");
    double best_loss = initial;
    std::vector<double> best = x;
    int best_step = 0;

    for (int step = 1; step <= opts.steps; ++step) {
        const double c1 = 1.0 - std::pow(beta1, step);
        const double c2 = 1.0 - std::pow(beta2, step);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            x[i] -= opts.step_size * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
        }
        const double loss = evaluate(x, &grad);
        if (!std::isfinite(loss)) throw std::runtime_error("match_descriptors: non-finite loss at step " + std::to_string(step));
        if (loss < best_loss) {
            best_loss = loss;
            best = x;
            best_step = step;
        }
    }

    double peak = 0.0;
    for (double s : best) peak = std::max(peak, std::abs(s));
    if (peak > 1.0)
        for (double& s : best) s /= peak;

    MatchResult r;
    r.clip = AudioClip(std::move(best), init.sample_rate);
    r.initial_loss = initial;
    r.achieved = describe(r.clip, opts.config);
    r.final_loss = descriptor_loss(target, r.achieved, opts.mask);
    r.best_step = best_step;
    return r;
}

}  // namespace swg
