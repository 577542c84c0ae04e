// swg: command-line front end. Results go to stdout, one-line errors to stderr.

#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swg/config.hpp"
#include "swg/descriptors.hpp"
#include "swg/envelope.hpp"
#include "swg/gradcheck.hpp"
#include "swg/io.hpp"
#include "swg/metrics.hpp"
#include "swg/protocol.hpp"
#include "swg/sampler.hpp"
#include "swg/synth.hpp"
#include "swg/train.hpp"

using namespace swg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig run_config(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

json descriptor_json(const DescriptorVector& v) {
    return {{"brightness", v.brightness}, {"depth", v.depth}, {"warmth", v.warmth}};
}

/// Optional per-descriptor targets from flags; unset ones stay masked off.
struct TargetFlags {
    std::optional<double> v[kNumDescriptors];

    void add(CLI::App* cmd) {
        cmd->add_option("--brightness", v[0], "Brightness target (0-100)");
        cmd->add_option("--depth", v[1], "Depth target (0-100)");
        cmd->add_option("--warmth", v[2], "Warmth target (0-100)");
    }
    void apply(DescriptorVector& d, DescriptorMask& m) const {
        for (auto k : kAllDescriptors) {
            const auto i = static_cast<std::size_t>(k);
            m.on[i] = v[i].has_value();
            if (v[i]) d[k] = *v[i];
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toy style-based drum synthesis with timbral control"};
    app.require_subcommand(1);

    // envelopes-extract
    auto* env_cmd = app.add_subcommand("envelopes-extract", "Per-class Hilbert envelopes from a manifest");
    std::string env_manifest, env_out;
    EnvelopeOptions env_opts;
    env_cmd->add_option("--manifest", env_manifest, "JSONL manifest")->required();
    env_cmd->add_option("--out-dir", env_out, "Output directory for <class>.env files")->required();
    env_cmd->add_option("--length", env_opts.length, "Envelope length in samples")->capture_default_str();
    env_cmd->add_option("--smooth", env_opts.smooth_len, "Moving-average window")->capture_default_str();
    env_cmd->add_option("--fade", env_opts.fade_len, "Tail fade length")->capture_default_str();

    // describe
    auto* desc_cmd = app.add_subcommand("describe", "Brightness, depth and warmth of a WAV file");
    std::string desc_in, desc_config;
    bool desc_json = false;
    desc_cmd->add_option("--in", desc_in, "Input WAV")->required();
    desc_cmd->add_flag("--json", desc_json, "Print JSON");
    desc_cmd->add_option("--config", desc_config, "Run configuration (descriptor.* keys)");

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and descriptor");
    GradCheckOptions gc_opts;
    double gc_tol = 1e-4;
    gc_cmd->add_option("--inputs", gc_opts.inputs_per_case, "Random inputs per case")->capture_default_str();
    gc_cmd->add_option("--max-length", gc_opts.max_descriptor_length, "Longest descriptor input")
        ->capture_default_str();
    gc_cmd->add_option("--tol", gc_tol, "Failure threshold")->capture_default_str();
    gc_cmd->add_option("--seed", gc_opts.seed, "RNG seed")->capture_default_str();

    // train-toy
    auto* tr_cmd = app.add_subcommand("train-toy", "Train the toy GAN");
    std::string tr_manifest, tr_config, tr_out, tr_log;
    std::size_t tr_synth = 0;
    std::optional<int> tr_steps;
    std::uint64_t tr_seed = 0;
    bool tr_quiet = false;
    tr_cmd->add_option("--manifest", tr_manifest, "JSONL manifest of the training set");
    tr_cmd->add_option("--synth", tr_synth, "Train on N in-memory synthetic clips instead of a manifest");
    tr_cmd->add_option("--config", tr_config, "Run configuration file");
    tr_cmd->add_option("--steps", tr_steps, "Training steps (overrides train.steps)");
    tr_cmd->add_option("--seed", tr_seed, "RNG seed")->capture_default_str();
    tr_cmd->add_option("--out", tr_out, "Checkpoint path")->required();
    tr_cmd->add_option("--log", tr_log, "Loss log CSV");
    tr_cmd->add_flag("--quiet", tr_quiet, "No progress on stderr");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate clips from a checkpoint");
    std::string gen_ckpt, gen_out, gen_class = "kick", gen_format = "float32";
    std::size_t gen_n = 1;
    std::uint64_t gen_seed = 0;
    bool gen_serial = false;
    TargetFlags gen_targets;
    gen_cmd->add_option("--ckpt", gen_ckpt, "Checkpoint")->required();
    gen_cmd->add_option("--out-dir", gen_out, "Output directory")->required();
    gen_cmd->add_option("--class", gen_class, "Drum class")->capture_default_str();
    gen_cmd->add_option("--n", gen_n, "Number of clips")->capture_default_str();
    gen_cmd->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen_cmd->add_option("--format", gen_format, "pcm16|float32")->capture_default_str();
    gen_cmd->add_flag("--serial", gen_serial, "Disable parallel generation");
    gen_targets.add(gen_cmd);

    // match-descriptors
    auto* md_cmd = app.add_subcommand("match-descriptors", "Move a clip's descriptors to targets by gradient descent");
    std::string md_in, md_out;
    std::size_t md_noise_len = 4096;
    std::uint64_t md_seed = 0;
    MatchOptions md_opts;
    TargetFlags md_targets;
    md_cmd->add_option("--in", md_in, "Input WAV (white noise when omitted)");
    md_cmd->add_option("--noise-length", md_noise_len, "Length of the white-noise start")->capture_default_str();
    md_cmd->add_option("--out", md_out, "Output WAV")->required();
    md_cmd->add_option("--steps", md_opts.steps, "Optimizer steps")->capture_default_str();
    md_cmd->add_option("--step-size", md_opts.step_size, "Optimizer step size")->capture_default_str();
    md_cmd->add_option("--seed", md_seed, "RNG seed for the noise start")->capture_default_str();
    md_targets.add(md_cmd);

    // fad
    auto* fad_cmd = app.add_subcommand("fad", "Frechet Audio Distance between two sets");
    std::string fad_a, fad_b, fad_ea, fad_eb;
    fad_cmd->add_option("--dir-a", fad_a, "Directory of WAVs");
    fad_cmd->add_option("--dir-b", fad_b, "Directory of WAVs");
    fad_cmd->add_option("--emb-a", fad_ea, "F32M embedding file");
    fad_cmd->add_option("--emb-b", fad_eb, "F32M embedding file");

    // eval-control
    auto* ec_cmd = app.add_subcommand("eval-control", "Descriptor-control evaluation of a checkpoint");
    std::string ec_ckpt, ec_desc = "brightness", ec_mode = "single", ec_scale = "per_class";
    std::string ec_json = "control_report.json", ec_csv = "control_scatter.csv";
    ProtocolOptions ec_opts;
    ec_cmd->add_option("--ckpt", ec_ckpt, "Checkpoint")->required();
    ec_cmd->add_option("--descriptor", ec_desc, "brightness|depth|warmth")->capture_default_str();
    ec_cmd->add_option("--mode", ec_mode, "single|combined|combined_dataset")->capture_default_str();
    ec_cmd->add_option("--scale", ec_scale, "per_class|global level scale")->capture_default_str();
    ec_cmd->add_option("--n", ec_opts.n_per_level, "Items per level")->capture_default_str();
    ec_cmd->add_option("--seed", ec_opts.seed, "RNG seed")->capture_default_str();
    ec_cmd->add_option("--out-json", ec_json, "Report JSON")->capture_default_str();
    ec_cmd->add_option("--out-csv", ec_csv, "Scatter CSV")->capture_default_str();

    // sample-report
    auto* sr_cmd = app.add_subcommand("sample-report", "Class histogram of sampler draws");
    std::string sr_manifest, sr_mode = "balanced";
    std::size_t sr_draws = 100000;
    std::uint64_t sr_seed = 0;
    sr_cmd->add_option("--manifest", sr_manifest, "JSONL manifest")->required();
    sr_cmd->add_option("--mode", sr_mode, "natural|balanced")->capture_default_str();
    sr_cmd->add_option("--draws", sr_draws, "Number of draws")->capture_default_str();
    sr_cmd->add_option("--seed", sr_seed, "RNG seed")->capture_default_str();

    // synth-dataset
    auto* sd_cmd = app.add_subcommand("synth-dataset", "Write the synthetic three-class drum set");
    std::string sd_out, sd_props = "0.1,0.6,0.3";
    SynthOptions sd_opts;
    std::uint64_t sd_seed = 0;
    sd_cmd->add_option("--out-dir", sd_out, "Output directory")->required();
    sd_cmd->add_option("--n", sd_opts.n, "Total clip count")->capture_default_str();
    sd_cmd->add_option("--proportions", sd_props, "kick,snare,closed_hh shares")->capture_default_str();
    sd_cmd->add_option("--length", sd_opts.length, "Clip length in samples")->capture_default_str();
    sd_cmd->add_option("--sample-rate", sd_opts.sample_rate, "Sample rate")->capture_default_str();
    sd_cmd->add_option("--seed", sd_seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (*env_cmd) {
            const fs::path mpath = env_manifest;
            const auto m = io::read_manifest(mpath);
            fs::create_directories(env_out);
            json out = json::object();
            for (auto c : m.classes()) {
                std::vector<AudioClip> clips;
                for (auto i : m.indices_of(c)) clips.push_back(io::read_wav(io::resolve_entry(mpath, m.entries()[i])));
                auto env = extract_class_envelope(c, clips, env_opts);
                const fs::path p = fs::path(env_out) / (to_string(c) + ".env");
                io::write_envelope(env, p);
                out[to_string(c)] = {{"path", p.string()}, {"clips", clips.size()}};
            }
            std::cout << out.dump(2) << "\n";
        } else if (*desc_cmd) {
            const auto cfg = run_config(desc_config);
            const auto v = describe(io::read_wav(desc_in), cfg.train.descriptors);
            if (desc_json)
                std::cout << descriptor_json(v).dump() << "\n";
            else
                std::printf("brightness %.6f\ndepth %.6f\nwarmth %.6f\n", v.brightness, v.depth, v.warmth);
        } else if (*gc_cmd) {
            const auto cases = gradcheck_suite(gc_opts);
            bool ok = true;
            for (const auto& c : cases) {
                const bool pass = c.max_error < gc_tol;
                ok = ok && pass;
                std::printf("%-22s inputs=%zu max_len=%zu max_rel_err=%.3e %s\n", c.name.c_str(), c.inputs,
                            c.max_length, c.max_error, pass ? "ok" : "FAIL");
            }
            if (!ok) {
                std::fprintf(stderr, "error: gradient check exceeded tolerance %.1e\n", gc_tol);
                return 1;
            }
        } else if (*tr_cmd) {
            auto cfg = run_config(tr_config);
            const int steps = tr_steps.value_or(cfg.steps);
            TrainingSet data;
            const auto len = static_cast<std::size_t>(cfg.model.output_length);
            if (!tr_manifest.empty()) {
                data = TrainingSet::load(tr_manifest, len, cfg.train.descriptors);
            } else if (tr_synth > 0) {
                SynthOptions so;
                so.n = tr_synth;
                so.sample_rate = cfg.model.sample_rate;
                so.length = len;
                auto [m, clips] = synth_set(so, tr_seed);
                data = TrainingSet::build(std::move(m), std::move(clips), len, cfg.train.descriptors);
            } else {
                throw std::invalid_argument("train-toy needs --manifest or --synth");
            }
            ProgressFn progress;
            if (!tr_quiet)
                progress = [&](const LogRow& r) {
                    if ((r.step + 1) % cfg.train.epoch_steps == 0)
                        std::fprintf(stderr, "step %d d_loss %.4f g_loss %.4f desc_l1 %.3f\n", r.step + 1, r.d_loss,
                                     r.g_loss, r.desc_l1);
                };
            auto res = train(cfg.model, cfg.train, data, steps, tr_seed, progress);
            save_checkpoint(res.checkpoint, tr_out);
            if (!tr_log.empty()) write_loss_log(res.log, tr_log);
            json out{{"checkpoint", tr_out}, {"steps", steps}};
            if (steps >= 2 * cfg.train.epoch_steps) {
                out["desc_l1_first_epoch"] = mean_desc_l1(res.log, 0, cfg.train.epoch_steps);
                out["desc_l1_last_epoch"] = mean_desc_l1(res.log, steps - cfg.train.epoch_steps, steps);
            }
            std::cout << out.dump(2) << "\n";
        } else if (*gen_cmd) {
            const auto ck = load_checkpoint(gen_ckpt);
            ConditionVector cond;
            cond.label = parse_drum_class(gen_class);
            gen_targets.apply(cond.descriptors, cond.mask);
            const auto fmt = io::parse_wav_format(gen_format);
            std::vector<ConditionVector> conds(gen_n, cond);
            const auto res = generate_batch(ck, conds, gen_seed, !gen_serial);
            fs::create_directories(gen_out);
            for (std::size_t i = 0; i < res.clips.size(); ++i) {
                char name[64];
                std::snprintf(name, sizeof name, "%s_%04zu.wav", gen_class.c_str(), i);
                io::write_wav(res.clips[i], fs::path(gen_out) / name, fmt);
            }
            std::cout << json{{"clips", res.clips.size()},
                              {"seconds", res.seconds},
                              {"clips_per_second", res.clips_per_second},
                              {"realtime_factor", res.realtime_factor}}
                             .dump(2)
                      << "\n";
        } else if (*md_cmd) {
            AudioClip init;
            if (!md_in.empty()) {
                init = io::read_wav(md_in);
            } else {
                std::mt19937_64 rng(md_seed);
                std::normal_distribution<double> N(0.0, 0.1);
                init.samples.resize(md_noise_len);
                for (auto& v : init.samples) v = N(rng);
            }
            DescriptorVector target = describe(init, md_opts.config);
            md_targets.apply(target, md_opts.mask);
            if (md_opts.mask.count() == 0) throw std::invalid_argument("give at least one of --brightness/--depth/--warmth");
            const auto r = match_descriptors(init, target, md_opts);
            io::write_wav(r.clip, md_out);
            std::cout << json{{"initial_loss", r.initial_loss},
                              {"final_loss", r.final_loss},
                              {"best_step", r.best_step},
                              {"achieved", descriptor_json(r.achieved)}}
                             .dump(2)
                      << "\n";
        } else if (*fad_cmd) {
            double d;
            if (!fad_a.empty() && !fad_b.empty()) {
                d = fad(embed_clips(io::read_wav_dir(fad_a)), embed_clips(io::read_wav_dir(fad_b)));
            } else if (!fad_ea.empty() && !fad_eb.empty()) {
                d = fad(io::read_embedding(fad_ea), io::read_embedding(fad_eb));
            } else {
                throw std::invalid_argument("fad needs --dir-a/--dir-b or --emb-a/--emb-b");
            }
            std::printf("%.10g\n", d);
        } else if (*ec_cmd) {
            const auto ck = load_checkpoint(ec_ckpt);
            ec_opts.descriptor = parse_descriptor(ec_desc);
            ec_opts.mode = parse_control_mode(ec_mode);
            ec_opts.scale = parse_level_scale(ec_scale);
            const auto res = control_eval_protocol(checkpoint_controller(ck, ec_opts.seed), ck.data, ec_opts);
            write_scatter_csv(res, ec_csv);
            const auto summary = summary_json(res);
            io::write_file(ec_json, summary + "\n");
            std::cout << summary << "\n";
        } else if (*sr_cmd) {
            const auto m = io::read_manifest(sr_manifest);
            Sampler s(m, parse_sampling_mode(sr_mode), sr_seed);
            std::vector<std::size_t> slots;
            slots.reserve(sr_draws);
            for (std::size_t i = 0; i < sr_draws; ++i) slots.push_back(m.class_slot(m.entries()[s.next()].drum_class));
            const auto h = class_histogram(slots, m.classes().size());
            json counts = json::object(), freq = json::object();
            for (std::size_t k = 0; k < h.counts.size(); ++k) {
                counts[to_string(m.classes()[k])] = h.counts[k];
                freq[to_string(m.classes()[k])] = static_cast<double>(h.counts[k]) / static_cast<double>(h.total);
            }
            std::cout << json{{"mode", sr_mode}, {"draws", h.total}, {"counts", counts}, {"frequencies", freq},
                              {"chi_square", h.chi_square}}
                             .dump(2)
                      << "\n";
        } else if (*sd_cmd) {
            const auto p = parse_doubles(sd_props);
            if (p.size() != 3) throw std::invalid_argument("--proportions needs three comma-separated values");
            sd_opts.proportions = {p[0], p[1], p[2]};
            const auto m = synth_dataset(sd_out, sd_opts, sd_seed);
            json counts = json::object();
            for (auto c : m.classes()) counts[to_string(c)] = m.indices_of(c).size();
            std::cout << json{{"manifest", (fs::path(sd_out) / "manifest.jsonl").string()}, {"counts", counts}}.dump(2)
                      << "\n";
        }
    } catch (const std::exception& ex) {
        std::string msg = ex.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return 1;
    }
    return 0;
}
