#include "swg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <stdexcept>

#include "swg/config.hpp"
#include "swg/io.hpp"

namespace swg {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
    if (lambda_lp < 0.0) throw std::invalid_argument("lambda_lp must be >= 0");
    if (penalty_interval < 0) throw std::invalid_argument("penalty_interval must be >= 0 (0 disables the penalty)");
    if (!(penalty_fd_step > 0.0)) throw std::invalid_argument("penalty_fd_step must be > 0");
    if (desc_weight < 0.0) throw std::invalid_argument("desc_weight must be >= 0");
    if (desc_keep_prob < 0.0 || desc_keep_prob > 1.0) throw std::invalid_argument("desc_keep_prob must lie in [0, 1]");
    if (epoch_steps < 1) throw std::invalid_argument("epoch_steps must be >= 1");
    if (env_smooth_len < 1) throw std::invalid_argument("env_smooth_len must be >= 1");
}

// ---------------------------------------------------------------------------
// Data

namespace {

AudioClip fit_length(const AudioClip& c, std::size_t length) {
    AudioClip out;
    out.sample_rate = c.sample_rate;
    out.samples.assign(length, 0.0);
    std::copy_n(c.samples.begin(), std::min(length, c.size()), out.samples.begin());
    return out;
}

}  // namespace

TrainingSet TrainingSet::build(DatasetManifest manifest, std::vector<AudioClip> clips, std::size_t length,
                               const DescriptorConfig& dcfg) {
    if (manifest.empty()) throw std::invalid_argument("training set is empty");
    if (manifest.size() != clips.size())
        throw std::invalid_argument("manifest has " + std::to_string(manifest.size()) + " entries but " +
                                    std::to_string(clips.size()) + " clips were given");
    if (length < kMinDescriptorLength) throw std::invalid_argument("training length too short");
    TrainingSet ts;
    ts.manifest = std::move(manifest);
    ts.clips.reserve(clips.size());
    ts.descriptors.reserve(clips.size());
    for (const auto& c : clips) {
        c.validate();
        ts.clips.push_back(fit_length(c, length));
        ts.descriptors.push_back(describe(ts.clips.back(), dcfg));
    }
    return ts;
}

TrainingSet TrainingSet::load(const std::filesystem::path& manifest_path, std::size_t length,
                              const DescriptorConfig& dcfg) {
    auto m = io::read_manifest(manifest_path);
    std::vector<AudioClip> clips;
    clips.reserve(m.size());
    for (const auto& e : m.entries()) clips.push_back(io::read_wav(io::resolve_entry(manifest_path, e)));
    return build(std::move(m), std::move(clips), length, dcfg);
}

std::vector<double> DatasetDescriptors::column(Descriptor d) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(v[d]);
    return out;
}

std::vector<double> DatasetDescriptors::column(Descriptor d, DrumClass c) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (classes[i] == c) out.push_back(values[i][d]);
    return out;
}

// ---------------------------------------------------------------------------
// Seeds

std::uint64_t clip_seed(std::uint64_t seed, std::size_t index) {
    // splitmix64 over a mix of both inputs
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1));
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr char kCkptMagic[4] = {'S', 'W', 'G', 'K'};

void put_tensor(std::string& out, const std::string& name, const ad::Shape& shape, std::span<const double> data) {
    io::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    io::put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : data) io::put_f32(out, static_cast<float>(v));
}

void load_params(ParamSet& set, const std::string& name, const ad::Shape& shape, std::vector<double> data) {
    if (!set.contains(name)) throw std::runtime_error("checkpoint tensor '" + name + "' is not part of the model");
    auto& p = set.get(name);
    if (p.shape != shape)
        throw std::runtime_error("checkpoint/config mismatch: tensor '" + name + "' has shape " + ad::shape_str(shape) +
                                 ", model expects " + ad::shape_str(p.shape));
    p.value = std::move(data);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    std::string out(kCkptMagic, 4);
    io::put_u32(out, kCheckpointVersion);
    const std::string cfg = model_config_text(ckpt.model);
    io::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    io::put_u64(out, ckpt.step);

    const auto& gp = ckpt.generator.params().all();
    const auto& dp = ckpt.discriminator.params().all();
    const auto& envs = ckpt.generator.envelopes();
    const std::size_t n_data = ckpt.data.values.size();
    const std::size_t count = gp.size() + dp.size() + envs.size() + (n_data > 0 ? 2 : 0);
    io::put_u32(out, static_cast<std::uint32_t>(count));
    for (const auto& p : gp) put_tensor(out, p.name, p.shape, p.value);
    for (const auto& p : dp) put_tensor(out, p.name, p.shape, p.value);
    for (const auto& e : envs) put_tensor(out, "env." + to_string(e.drum_class), {e.size()}, e.values);
    if (n_data > 0) {
        std::vector<double> desc, cls;
        desc.reserve(3 * n_data);
        cls.reserve(n_data);
        for (std::size_t i = 0; i < n_data; ++i) {
            for (double v : ckpt.data.values[i].as_array()) desc.push_back(v);
            cls.push_back(static_cast<double>(ckpt.data.classes[i]));
        }
        put_tensor(out, "data.desc", {n_data, kNumDescriptors}, desc);
        put_tensor(out, "data.class", {n_data}, cls);
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 4, kCkptMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint (missing SWGK magic)");
    std::size_t pos = 4;
    const auto version = io::get_u32(bytes, pos);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto cfg_len = io::get_u32(bytes, pos);
    if (pos + cfg_len > bytes.size()) throw std::runtime_error("truncated checkpoint config block");
    Checkpoint ck;
    ck.model = parse_model_config(bytes.substr(pos, cfg_len));
    pos += cfg_len;
    ck.step = io::get_u64(bytes, pos);
    ck.generator = Generator(ck.model, 0);
    ck.discriminator = Discriminator(ck.model, 0);

    const auto count = io::get_u32(bytes, pos);
    std::size_t g_seen = 0, d_seen = 0;
    std::vector<double> data_desc, data_cls;
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto name_len = io::get_u32(bytes, pos);
        if (pos + name_len > bytes.size()) throw std::runtime_error("truncated checkpoint tensor name");
        const std::string name = bytes.substr(pos, name_len);
        pos += name_len;
        const auto rank = io::get_u32(bytes, pos);
        if (rank > 8) throw std::runtime_error("checkpoint tensor '" + name + "' has implausible rank");
        ad::Shape shape(rank);
        for (auto& d : shape) d = io::get_u32(bytes, pos);
        std::vector<double> data(ad::numel(shape));
        for (auto& v : data) v = io::get_f32(bytes, pos);

        if (name.starts_with("g.")) {
            load_params(ck.generator.params(), name, shape, std::move(data));
            ++g_seen;
        } else if (name.starts_with("d.")) {
            load_params(ck.discriminator.params(), name, shape, std::move(data));
            ++d_seen;
        } else if (name.starts_with("env.")) {
            EnvelopeTable env;
            env.drum_class = parse_drum_class(name.substr(4));
            env.sample_rate = ck.model.sample_rate;
            env.values = std::move(data);
            ck.generator.envelopes().push_back(std::move(env));
        } else if (name == "data.desc") {
            if (shape.size() != 2 || shape[1] != kNumDescriptors)
                throw std::runtime_error("data.desc must have shape [N,3]");
            data_desc = std::move(data);
        } else if (name == "data.class") {
            data_cls = std::move(data);
        } else {
            throw std::runtime_error("unknown checkpoint tensor '" + name + "'");
        }
    }
    if (pos != bytes.size()) throw std::runtime_error("trailing bytes after checkpoint tensors");
    if (g_seen != ck.generator.params().size() || d_seen != ck.discriminator.params().size())
        throw std::runtime_error("checkpoint/config mismatch: parameter count differs from the model");

    auto& envs = ck.generator.envelopes();
    if (!envs.empty()) {
        std::vector<EnvelopeTable> ordered;
        for (auto c : ck.model.classes) {
            auto it = std::find_if(envs.begin(), envs.end(), [c](const EnvelopeTable& e) { return e.drum_class == c; });
            if (it == envs.end()) throw std::runtime_error("checkpoint lacks the envelope for class " + to_string(c));
            if (it->size() != static_cast<std::size_t>(ck.model.output_length))
                throw std::runtime_error("checkpoint/config mismatch: envelope length differs from output_length");
            ordered.push_back(*it);
        }
        envs = std::move(ordered);
    } else if (ck.model.use_envelope) {
        throw std::runtime_error("checkpoint has use_envelope set but stores no envelopes");
    }

    if (data_desc.size() != kNumDescriptors * data_cls.size())
        throw std::runtime_error("data.desc and data.class disagree on the item count");
    for (std::size_t i = 0; i < data_cls.size(); ++i) {
        const auto c = static_cast<int>(data_cls[i]);
        if (c < 0 || c >= static_cast<int>(kNumDrumClasses)) throw std::runtime_error("bad class id in data.class");
        ck.data.classes.push_back(static_cast<DrumClass>(c));
        ck.data.values.push_back({data_desc[3 * i], data_desc[3 * i + 1], data_desc[3 * i + 2]});
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    io::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    try {
        return deserialize_checkpoint(io::read_file(path));
    } catch (const std::exception& ex) {
        throw std::runtime_error(path.string() + ": " + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Training

Checkpoint initialize(const ModelConfig& model, const TrainConfig& tc, const TrainingSet& data, std::uint64_t seed) {
    model.validate();
    tc.validate();
    if (data.clips.empty()) throw std::invalid_argument("training set is empty");
    Checkpoint ck;
    ck.model = model;
    ck.generator = Generator(model, clip_seed(seed, 0));
    ck.discriminator = Discriminator(model, clip_seed(seed, 1));

    const auto& entries = data.manifest.entries();
    for (std::size_t i = 0; i < data.clips.size(); ++i) {
        if (data.clips[i].sample_rate != model.sample_rate)
            throw std::invalid_argument("clip " + entries[i].path + " has sample rate " +
                                        std::to_string(data.clips[i].sample_rate) + ", model expects " +
                                        std::to_string(model.sample_rate));
        if (data.clips[i].size() != static_cast<std::size_t>(model.output_length))
            throw std::invalid_argument("training clips must be fitted to output_length");
    }
    for (auto c : data.manifest.classes()) model.class_slot(c);  // every dataset class must be modelled

    for (auto c : model.classes) {
        std::vector<AudioClip> cls;
        for (auto i : data.manifest.indices_of(c)) cls.push_back(data.clips[i]);
        if (cls.empty()) throw std::invalid_argument("class " + to_string(c) + " has no training clips");
        if (model.use_envelope) {
            EnvelopeOptions eo{static_cast<std::size_t>(model.output_length), tc.env_smooth_len, tc.env_fade_len};
            ck.generator.envelopes().push_back(extract_class_envelope(c, cls, eo));
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ck.data.classes.push_back(entries[i].drum_class);
        ck.data.values.push_back(data.descriptors[i]);
    }
    return ck;
}

double mean_desc_l1(std::span<const LogRow> log, int begin, int end) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : log)
        if (r.step >= begin && r.step < end) {
            s += r.desc_l1;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("no log rows in the requested step range");
    return s / static_cast<double>(n);
}

namespace {

class Adam {
public:
    Adam(const ParamSet& ps, const TrainConfig& tc) : tc_(tc) {
        for (const auto& p : ps.all()) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }

    void step(ParamSet& ps) {
        ++t_;
        const double c1 = 1.0 - std::pow(tc_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(tc_.beta2, static_cast<double>(t_));
        std::size_t k = 0;
        for (auto& p : ps.all()) {
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.grad[i];
                m[i] = tc_.beta1 * m[i] + (1.0 - tc_.beta1) * g;
                v[i] = tc_.beta2 * v[i] + (1.0 - tc_.beta2) * g * g;
                p.value[i] -= tc_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + tc_.adam_eps);
            }
            ++k;
        }
    }

private:
    const TrainConfig& tc_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

struct Item {
    std::size_t index = 0;
    ConditionVector cond;
};

Item draw_item(const TrainingSet& data, const ModelConfig& model, const TrainConfig& tc, Sampler& sampler,
               std::mt19937_64& rng) {
    Item it;
    it.index = sampler.next();
    it.cond.label = data.manifest.entries()[it.index].drum_class;
    it.cond.descriptors = data.descriptors[it.index];
    std::bernoulli_distribution keep(tc.desc_keep_prob);
    for (auto& on : it.cond.mask.on) on = model.use_descriptors && keep(rng);
    return it;
}

double d_score(ad::Graph& g, const Discriminator& D, const BoundParams& p, std::span<const double> x,
               const ConditionVector& cond, double weight) {
    auto s = D.forward(p, g.constant({x.begin(), x.end()}, {x.size()}), cond);
    g.backward(ad::scale(s, weight));
    return s.item();
}

/// Gradient of D w.r.t. its input at x.
std::vector<double> input_gradient(const Discriminator& D, std::span<const double> x, const ConditionVector& cond) {
    ad::Graph g;
    auto p = bind_constant(g, D.params());
    auto in = g.variable({x.begin(), x.end()}, {x.size()});
    g.backward(D.forward(p, in, cond));
    return {in.grad().begin(), in.grad().end()};
}

void check_loss(double v, int step) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite loss at step " + std::to_string(step));
}

}  // namespace

TrainResult train(const ModelConfig& model, const TrainConfig& tc, const TrainingSet& data, int steps,
                  std::uint64_t seed, const ProgressFn& progress) {
    return train_from(initialize(model, tc, data, seed), tc, data, steps, seed, progress);
}

TrainResult train_from(Checkpoint ckpt, const TrainConfig& tc, const TrainingSet& data, int steps, std::uint64_t seed,
                       const ProgressFn& progress) {
    tc.validate();
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    const auto t0 = std::chrono::steady_clock::now();
    const ModelConfig& model = ckpt.model;
    Generator& G = ckpt.generator;
    Discriminator& D = ckpt.discriminator;
    const auto B = static_cast<std::size_t>(tc.batch_size);
    const int sr = model.sample_rate;

    std::mt19937_64 rng(clip_seed(seed, 2 + ckpt.step));
    Sampler sampler(data.manifest, tc.sampler, clip_seed(seed, 3 + ckpt.step));
    Adam opt_g(G.params(), tc), opt_d(D.params(), tc);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    TrainResult res;
    res.log.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        const int step = static_cast<int>(ckpt.step) + s;
        LogRow row;
        row.step = step;
        try {
            // Discriminator update.
            D.params().zero_grad();
            std::vector<double> real_scores, fake_scores, norms;
            const bool penalize =
                tc.lambda_lp > 0.0 && tc.penalty_interval > 0 && step % tc.penalty_interval == 0;
            for (std::size_t b = 0; b < B; ++b) {
                const Item it = draw_item(data, model, tc, sampler, rng);
                const auto z = G.sample_latent(rng);
                const auto noise = G.sample_noise(rng);
                const auto fake = G.synthesize(z, it.cond, noise);
                const auto& real = data.clips[it.index].samples;
                {
                    ad::Graph g;
                    auto p = bind(g, D.params(), true);
                    real_scores.push_back(d_score(g, D, p, real, it.cond, -1.0 / static_cast<double>(B)));
                }
                {
                    ad::Graph g;
                    auto p = bind(g, D.params(), true);
                    fake_scores.push_back(d_score(g, D, p, fake.samples, it.cond, 1.0 / static_cast<double>(B)));
                }
                if (penalize) {
                    // Lipschitz penalty at a random interpolate. d|grad_x D|/dtheta is
                    // taken as the central difference of D along the unit gradient.
                    const double t = unif(rng);
                    std::vector<double> xh(real.size());
                    for (std::size_t i = 0; i < xh.size(); ++i) xh[i] = t * real[i] + (1.0 - t) * fake.samples[i];
                    const auto gx = input_gradient(D, xh, it.cond);
                    double nrm = 0.0;
                    for (double v : gx) nrm += v * v;
                    nrm = std::sqrt(nrm);
                    norms.push_back(nrm);
                    if (nrm > 1.0) {
                        const double coef = tc.lambda_lp * 2.0 * (nrm - 1.0) / static_cast<double>(B) *
                                            static_cast<double>(tc.penalty_interval);
                        const double h = tc.penalty_fd_step;
                        for (int sign : {1, -1}) {
                            std::vector<double> xs(xh.size());
                            for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = xh[i] + sign * h * gx[i] / nrm;
                            ad::Graph g;
                            auto p = bind(g, D.params(), true);
                            d_score(g, D, p, xs, it.cond, sign * coef / (2.0 * h));
                        }
                    }
                }
            }
            const auto losses = wgan_lp_loss(real_scores, fake_scores, norms, tc.lambda_lp);
            row.d_loss = losses.d_loss;
            check_loss(row.d_loss, step);
            opt_d.step(D.params());

            // Generator update.
            G.params().zero_grad();
            double g_loss = 0.0, desc_sum = 0.0;
            std::size_t desc_n = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const Item it = draw_item(data, model, tc, sampler, rng);
                const auto z = G.sample_latent(rng);
                const auto noise = G.sample_noise(rng);
                ad::Graph g;
                auto gp = bind(g, G.params(), true);
                auto dp = bind_constant(g, D.params());
                auto audio = G.forward(gp, z, it.cond, noise);
                auto score = D.forward(dp, audio, it.cond);
                auto loss = ad::scale(score, -1.0 / static_cast<double>(B));
                g_loss -= score.item() / static_cast<double>(B);
                if (it.cond.mask.count() > 0) {
                    std::array<ad::Tensor, kNumDescriptors> produced;
                    for (auto d : kAllDescriptors)
                        if (it.cond.mask[d])
                            produced[static_cast<std::size_t>(d)] = descriptors::compute(d, audio, sr, tc.descriptors);
                    auto l1 = descriptors::l1_loss(it.cond.descriptors, produced, it.cond.mask);
                    desc_sum += l1.item();
                    ++desc_n;
                    if (tc.desc_weight > 0.0)
                        loss = ad::add(loss, ad::scale(l1, tc.desc_weight / static_cast<double>(B)));
                }
                g.backward(loss);
            }
            row.g_loss = g_loss;
            row.desc_l1 = desc_n > 0 ? desc_sum / static_cast<double>(desc_n) : 0.0;
            check_loss(row.g_loss, step);
            check_loss(row.desc_l1, step);
            opt_g.step(G.params());
        } catch (const std::runtime_error& ex) {
            const std::string what = ex.what();
            if (what.starts_with("non-finite loss")) throw;
            throw std::runtime_error("step " + std::to_string(step) + ": " + what);
        }
        res.log.push_back(row);
        if (progress) progress(row);
    }
    ckpt.step += static_cast<std::uint64_t>(steps);
    res.checkpoint = std::move(ckpt);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

void write_loss_log(std::span<const LogRow> log, const std::filesystem::path& path) {
    std::string out = "step,d_loss,g_loss,desc_l1\n";
    char buf[128];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", r.step, r.d_loss, r.g_loss, r.desc_l1);
        out += buf;
    }
    io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Generation

GenerateResult generate_batch(const Checkpoint& ckpt, std::span<const ConditionVector> conds, std::uint64_t seed,
                              bool parallel) {
    const Generator& G = ckpt.generator;
    if (!(G.config() == ckpt.model)) throw std::runtime_error("checkpoint/config mismatch: generator config differs");
    if (ckpt.model.use_envelope && G.envelopes().size() != ckpt.model.classes.size())
        throw std::runtime_error("checkpoint/config mismatch: missing class envelopes");
    for (const auto& c : conds) ckpt.model.class_slot(c.label);

    GenerateResult res;
    res.clips.resize(conds.size());
    const auto t0 = std::chrono::steady_clock::now();
    std::exception_ptr err;
    const auto n = static_cast<long>(conds.size());
#pragma omp parallel for schedule(dynamic) if (parallel && n > 1)
    for (long i = 0; i < n; ++i) {
        try {
            std::mt19937_64 rng(clip_seed(seed, static_cast<std::size_t>(i)));
            const auto z = G.sample_latent(rng);
            const auto noise = G.sample_noise(rng);
            res.clips[static_cast<std::size_t>(i)] = G.synthesize(z, conds[static_cast<std::size_t>(i)], noise);
        } catch (...) {
#pragma omp critical(swg_generate_error)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double secs = std::max(res.seconds, 1e-9);
    res.clips_per_second = static_cast<double>(res.clips.size()) / secs;
    const double audio = static_cast<double>(res.clips.size()) * ckpt.model.output_length / ckpt.model.sample_rate;
    res.realtime_factor = audio / secs;
    return res;
}

}  // namespace swg
