#include "swg/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "swg/io.hpp"

namespace swg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument(key + ": cannot parse '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected true|false, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define SWG_INT(key, field)                                                                           \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = parse_number<int>(key, v); },         \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define SWG_SIZE(key, field)                                                                          \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = parse_number<std::size_t>(key, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define SWG_REAL(key, field)                                                                          \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = parse_number<double>(key, v); },      \
        [](const RunConfig& c) { return fmt(c.field); }}
#define SWG_BOOL(key, field)                                                                          \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = parse_bool(key, v); },                \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define SWG_INTS(key, field)                                                                          \
    Key{key,                                                                                          \
        [](RunConfig& c, const std::string& v) {                                                      \
            c.field.clear();                                                                          \
            for (const auto& x : split_list(v)) c.field.push_back(parse_number<int>(key, x));         \
        },                                                                                            \
        [](const RunConfig& c) { return fmt_list(c.field); }}

const std::vector<Key>& keys() {
    static const std::vector<Key> k{
        SWG_INT("model.sample_rate", model.sample_rate),
        SWG_INT("model.output_length", model.output_length),
        SWG_INTS("model.channels", model.channels),
        SWG_INTS("model.disc_channels", model.disc_channels),
        SWG_INT("model.kernel", model.kernel),
        SWG_INT("model.mapping_layers", model.mapping_layers),
        SWG_INT("model.d_z", model.d_z),
        SWG_INT("model.d_w", model.d_w),
        SWG_INT("model.d_embed", model.d_embed),
        Key{"model.classes",
            [](RunConfig& c, const std::string& v) {
                c.model.classes.clear();
                for (const auto& x : split_list(v)) c.model.classes.push_back(parse_drum_class(x));
            },
            [](const RunConfig& c) {
                std::string s;
                for (std::size_t i = 0; i < c.model.classes.size(); ++i)
                    s += (i ? "," : "") + to_string(c.model.classes[i]);
                return s;
            }},
        SWG_BOOL("model.use_descriptors", model.use_descriptors),
        SWG_BOOL("model.use_envelope", model.use_envelope),
        Key{"model.disc_variant",
            [](RunConfig& c, const std::string& v) { c.model.disc_variant = parse_discriminator_variant(v); },
            [](const RunConfig& c) { return to_string(c.model.disc_variant); }},
        SWG_REAL("model.autofade_init", model.autofade_init),

        SWG_INT("train.steps", steps),
        SWG_INT("train.batch_size", train.batch_size),
        SWG_REAL("train.lr", train.lr),
        SWG_REAL("train.beta1", train.beta1),
        SWG_REAL("train.beta2", train.beta2),
        SWG_REAL("train.adam_eps", train.adam_eps),
        SWG_REAL("train.lambda_lp", train.lambda_lp),
        SWG_INT("train.penalty_interval", train.penalty_interval),
        SWG_REAL("train.penalty_fd_step", train.penalty_fd_step),
        SWG_REAL("train.desc_weight", train.desc_weight),
        SWG_REAL("train.desc_keep_prob", train.desc_keep_prob),
        Key{"train.sampler",
            [](RunConfig& c, const std::string& v) { c.train.sampler = parse_sampling_mode(v); },
            [](const RunConfig& c) { return to_string(c.train.sampler); }},
        SWG_INT("train.epoch_steps", train.epoch_steps),
        SWG_SIZE("train.env_smooth_len", train.env_smooth_len),
        SWG_SIZE("train.env_fade_len", train.env_fade_len),

        SWG_REAL("descriptor.eps", train.descriptors.eps),
        SWG_REAL("descriptor.bright_a", train.descriptors.bright_a),
        SWG_REAL("descriptor.bright_c0", train.descriptors.bright_c0),
        SWG_REAL("descriptor.bright_b", train.descriptors.bright_b),
        SWG_REAL("descriptor.bright_d", train.descriptors.bright_d),
        SWG_REAL("descriptor.bright_hi_edge", train.descriptors.bright_hi_edge),
        SWG_REAL("descriptor.depth_a", train.descriptors.depth_a),
        SWG_REAL("descriptor.depth_b", train.descriptors.depth_b),
        SWG_REAL("descriptor.depth_c1", train.descriptors.depth_c1),
        SWG_REAL("descriptor.depth_lo_edge", train.descriptors.depth_lo_edge),
        SWG_REAL("descriptor.warm_a", train.descriptors.warm_a),
        SWG_REAL("descriptor.warm_b", train.descriptors.warm_b),
        SWG_REAL("descriptor.warm_c2", train.descriptors.warm_c2),
        SWG_REAL("descriptor.warm_lo", train.descriptors.warm_lo),
        SWG_REAL("descriptor.warm_hi", train.descriptors.warm_hi),

        SWG_INT("mel.n_bands", mel.n_bands),
        SWG_INT("mel.frame_len", mel.frame_len),
        SWG_INT("mel.hop", mel.hop),
    };
    return k;
}

#undef SWG_INT
#undef SWG_SIZE
#undef SWG_REAL
#undef SWG_BOOL
#undef SWG_INTS

void apply(RunConfig& cfg, const std::string& text, const std::string& only_prefix) {
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Key* found = nullptr;
        for (const auto& k : keys())
            if (k.name == key) found = &k;
        if (!found || !key.starts_with(only_prefix))
            throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        try {
            found->set(cfg, value);
        } catch (const std::exception& ex) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
}

std::string dump(const RunConfig& cfg, const std::string& only_prefix) {
    std::string out;
    for (const auto& k : keys())
        if (k.name.starts_with(only_prefix)) out += k.name + " = " + k.get(cfg) + "\n";
    return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    apply(cfg, text, "");
    cfg.model.validate();
    cfg.train.validate();
    if (cfg.steps < 0) throw std::invalid_argument("train.steps must be >= 0");
    if (cfg.mel.n_bands < 1 || cfg.mel.frame_len < 1 || cfg.mel.hop < 1)
        throw std::invalid_argument("mel settings must be positive");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    try {
        return parse_run_config(io::read_file(path));
    } catch (const std::exception& ex) {
        throw std::invalid_argument(path.string() + ": " + ex.what());
    }
}

std::string to_text(const RunConfig& cfg) { return dump(cfg, ""); }

std::string model_config_text(const ModelConfig& m) {
    RunConfig c;
    c.model = m;
    return dump(c, "model.");
}

ModelConfig parse_model_config(const std::string& text) {
    RunConfig c;
    apply(c, text, "model.");
    c.model.validate();
    return c.model;
}

}  // namespace swg
