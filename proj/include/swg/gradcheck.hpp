#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace swg {

struct GradCheckCase {
    std::string name;
    std::size_t inputs = 0;
    std::size_t max_length = 0;
    double max_error = 0.0;
};

struct GradCheckOptions {
    std::size_t inputs_per_case = 20;
    std::size_t max_op_length = 256;
    /// Descriptor inputs cycle through lengths up to this value.
    std::size_t max_descriptor_length = 1024;
    double h = 1e-5;
    std::uint64_t seed = 0;
};

/// Finite-difference check of every differentiable op and the three
/// descriptors on random inputs. Each op output is reduced to a scalar with a
/// fixed random projection.
std::vector<GradCheckCase> gradcheck_suite(const GradCheckOptions& opts);

}  // namespace swg
