#pragma once

// Descriptor-control evaluation: build conditions at the 0.2/0.5/0.8 levels of
// a descriptor's min/max range, run them through a controller (normally a
// trained generator followed by the descriptor analysis) and score the result.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swg/gan.hpp"
#include "swg/metrics.hpp"
#include "swg/train.hpp"

namespace swg {

enum class ControlMode { single, combined, combined_dataset };
std::string to_string(ControlMode m);
ControlMode parse_control_mode(const std::string& s);

/// Where the min/max of the level scale comes from.
enum class LevelScale { per_class, global };
std::string to_string(LevelScale s);
LevelScale parse_level_scale(const std::string& s);

/// Measured descriptors for a condition. Calls sharing `pair` must use the same
/// latent. Must be safe to call concurrently.
using Controller = std::function<DescriptorVector(const ConditionVector& cond, std::size_t pair)>;

struct ProtocolOptions {
    Descriptor descriptor = Descriptor::brightness;
    ControlMode mode = ControlMode::single;
    std::size_t n_per_level = 50;
    LevelScale scale = LevelScale::per_class;
    /// Empty: every class present in the dataset values.
    std::vector<DrumClass> classes;
    std::uint64_t seed = 0;
    bool parallel = true;
};

struct ProtocolResult {
    ControlMode mode = ControlMode::single;
    LevelScale scale = LevelScale::per_class;
    std::vector<ControlEvalRecord> records;
    OrderingReport ordering;
    MaeReport mae;
    std::optional<RegressionReport> regression;
};

/// single: only the evaluated descriptor is conditioned. combined: the other
/// descriptors come from a dataset item of the same class, the evaluated one is
/// overwritten with the level value. combined_dataset: all values come from
/// dataset items (no levels, so ordering is absent). Each mode yields
/// 3 * n_per_level records.
ProtocolResult control_eval_protocol(const Controller& controller, const DatasetDescriptors& data,
                                     const ProtocolOptions& opts);

/// Generator + descriptor analysis; the latent and noise of pair p come from clip_seed(seed, p).
Controller checkpoint_controller(const Checkpoint& ckpt, std::uint64_t seed, const DescriptorConfig& dcfg = {});

/// descriptor,target,measured,class,mode
void write_scatter_csv(const ProtocolResult& r, const std::filesystem::path& path);
/// {"e1","e2","e3","f1","f2","f3","r2","slope"} with null where absent, plus bookkeeping fields.
std::string summary_json(const ProtocolResult& r);

}  // namespace swg
