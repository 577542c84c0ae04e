#include "swg/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "swg/io.hpp"

namespace swg {

std::string to_string(ControlMode m) {
    switch (m) {
        case ControlMode::single: return "single";
        case ControlMode::combined: return "combined";
        case ControlMode::combined_dataset: return "combined_dataset";
    }
    return "?";
}

ControlMode parse_control_mode(const std::string& s) {
    if (s == "single") return ControlMode::single;
    if (s == "combined") return ControlMode::combined;
    if (s == "combined_dataset" || s == "combined-dataset") return ControlMode::combined_dataset;
    throw std::invalid_argument("unknown control mode '" + s + "' (expected single|combined|combined_dataset)");
}

std::string to_string(LevelScale s) { return s == LevelScale::per_class ? "per_class" : "global"; }

LevelScale parse_level_scale(const std::string& s) {
    if (s == "per_class" || s == "per-class") return LevelScale::per_class;
    if (s == "global") return LevelScale::global;
    throw std::invalid_argument("unknown level scale '" + s + "' (expected per_class|global)");
}

ProtocolResult control_eval_protocol(const Controller& controller, const DatasetDescriptors& data,
                                     const ProtocolOptions& opts) {
    if (data.values.empty()) throw std::invalid_argument("control evaluation needs dataset descriptor values");
    if (opts.n_per_level == 0) throw std::invalid_argument("n per level must be >= 1");
    std::vector<DrumClass> classes = opts.classes;
    if (classes.empty())
        for (auto c : data.classes)
            if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);

    const Descriptor d = opts.descriptor;
    const auto all_values = data.column(d);
    std::vector<std::vector<std::size_t>> members(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        for (std::size_t i = 0; i < data.values.size(); ++i)
            if (data.classes[i] == classes[k]) members[k].push_back(i);
        if (members[k].empty()) throw std::invalid_argument("no dataset items for class " + to_string(classes[k]));
    }

    ProtocolResult res;
    res.mode = opts.mode;
    res.scale = opts.scale;
    std::vector<ConditionVector> conds;
    std::mt19937_64 rng(opts.seed);
    constexpr double kLevels[3] = {kLevelLow, kLevelMid, kLevelHigh};
    for (std::size_t p = 0; p < opts.n_per_level; ++p) {
        const std::size_t k = p % classes.size();
        const auto vals = opts.scale == LevelScale::per_class ? data.column(d, classes[k]) : all_values;
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        std::uniform_int_distribution<std::size_t> pick(0, members[k].size() - 1);
        const std::size_t aux_item = members[k][pick(rng)];
        for (int l = 0; l < 3; ++l) {
            ConditionVector c;
            c.label = classes[k];
            ControlEvalRecord r;
            r.descriptor = d;
            r.drum_class = classes[k];
            r.pair = p;
            switch (opts.mode) {
                case ControlMode::single:
                    c.mask = DescriptorMask::only(d);
                    c.descriptors[d] = *lo + kLevels[l] * (*hi - *lo);
                    r.level = kLevels[l];
                    r.aux = AuxSource::fixed;
                    break;
                case ControlMode::combined:
                    c.mask = DescriptorMask::all();
                    c.descriptors = data.values[aux_item];
                    c.descriptors[d] = *lo + kLevels[l] * (*hi - *lo);
                    r.level = kLevels[l];
                    r.aux = AuxSource::dataset;
                    break;
                case ControlMode::combined_dataset:
                    c.mask = DescriptorMask::all();
                    c.descriptors = data.values[l == 0 ? aux_item : members[k][pick(rng)]];
                    r.aux = AuxSource::dataset;
                    break;
            }
            r.target = c.descriptors[d];
            res.records.push_back(r);
            conds.push_back(c);
        }
    }

    std::exception_ptr err;
    const auto n = static_cast<long>(conds.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel && n > 1)
    for (long i = 0; i < n; ++i) {
        try {
            auto& r = res.records[static_cast<std::size_t>(i)];
            r.measured = controller(conds[static_cast<std::size_t>(i)], r.pair)[d];
        } catch (...) {
#pragma omp critical(swg_protocol_error)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    res.ordering = ordering_accuracy(res.records);
    res.mae = mae_quantile(res.records, all_values);
    try {
        res.regression = linear_fit_r2(res.records, all_values);
    } catch (const std::invalid_argument&) {
        res.regression.reset();
    }
    return res;
}

Controller checkpoint_controller(const Checkpoint& ckpt, std::uint64_t seed, const DescriptorConfig& dcfg) {
    const Checkpoint* ck = &ckpt;
    return [ck, seed, dcfg](const ConditionVector& cond, std::size_t pair) {
        std::mt19937_64 rng(clip_seed(seed, pair));
        const auto z = ck->generator.sample_latent(rng);
        const auto noise = ck->generator.sample_noise(rng);
        return describe(ck->generator.synthesize(z, cond, noise), dcfg);
    };
}

void write_scatter_csv(const ProtocolResult& r, const std::filesystem::path& path) {
    std::string out = "descriptor,target,measured,class,mode\n";
    char buf[160];
    for (const auto& rec : r.records) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%s,%s\n", to_string(rec.descriptor).c_str(), rec.target,
                      rec.measured, to_string(rec.drum_class).c_str(), to_string(r.mode).c_str());
        out += buf;
    }
    io::write_file(path, out);
}

std::string summary_json(const ProtocolResult& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["e1"] = opt(r.ordering.e1);
    j["e2"] = opt(r.ordering.e2);
    j["e3"] = opt(r.ordering.e3);
    j["f1"] = opt(r.mae.f1);
    j["f2"] = opt(r.mae.f2);
    j["f3"] = opt(r.mae.f3);
    j["r2"] = r.regression ? nlohmann::json(r.regression->r2) : nlohmann::json(nullptr);
    j["slope"] = r.regression ? nlohmann::json(r.regression->slope) : nlohmann::json(nullptr);
    j["mode"] = to_string(r.mode);
    j["level_scale"] = to_string(r.scale);
    j["records"] = r.records.size();
    if (!r.records.empty()) j["descriptor"] = to_string(r.records.front().descriptor);
    return j.dump(2);
}

}  // namespace swg
