#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swg/descriptors.hpp"
#include "swg/dsp.hpp"
#include "swg/envelope.hpp"

namespace swg {

/// rows = items, cols = embedding dimension, row-major.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct GaussianStats {
    std::vector<double> mean;
    std::vector<double> cov;  // dim x dim, row-major, symmetric
    std::size_t dim() const noexcept { return mean.size(); }
};

/// Sample mean and unbiased covariance, symmetrized. Needs rows > cols.
GaussianStats fit_gaussian(const EmbeddingMatrix& e);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
/// Square roots by symmetric eigendecomposition, eigenvalues clamped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

double fad(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Mean and standard deviation over frames of the mel log energies (2 * n_bands values).
std::vector<double> mel_stats_embedding(const AudioClip& clip, const dsp::MelConfig& cfg = {});

namespace kernels {
namespace serial {
EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg);
}
namespace omp {
EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg);
}
}  // namespace kernels

EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg = {});

// ---------------------------------------------------------------------------
// Descriptor-control evaluation

enum class AuxSource { fixed, dataset };

/// One generated item. `level` is the min/max-scale level (0.2, 0.5, 0.8) when
/// the target came from a level; records sharing `pair` were generated with the
/// same latent and class.
struct ControlEvalRecord {
    Descriptor descriptor = Descriptor::brightness;
    DrumClass drum_class = DrumClass::kick;
    double target = 0.0;
    double measured = 0.0;
    std::optional<double> level;
    std::size_t pair = 0;
    AuxSource aux = AuxSource::fixed;
};

inline constexpr double kLevelLow = 0.2;
inline constexpr double kLevelMid = 0.5;
inline constexpr double kLevelHigh = 0.8;

/// A criterion with no pairs is absent (nullopt), never zero.
struct OrderingReport {
    std::optional<double> e1, e2, e3;
    std::size_t n1 = 0, n2 = 0, n3 = 0;
};

/// E1 compares (0.2, 0.8) pairs, E2 (0.2, 0.5), E3 (0.5, 0.8). A pair passes
/// when the higher level measures strictly higher; ties fail.
OrderingReport ordering_accuracy(std::span<const ControlEvalRecord> records);

/// Linear-interpolation empirical quantile (p in [0, 1]).
double quantile(std::vector<double> values, double p);

struct MaeReport {
    std::optional<double> f1, f2, f3;
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    double q20 = 0.0, q50 = 0.0, q80 = 0.0;
};

/// F1 over targets in [q20, q50], F2 over [q50, q80], F3 over [q20, q80] of the
/// dataset values. Empty regions are absent.
MaeReport mae_quantile(std::span<const ControlEvalRecord> records, std::span<const double> dataset_values);

struct RegressionReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

/// Least squares of measured on target over targets in [q20, q80];
/// R^2 = 1 - SS_res / SS_tot around the mean measured value. Constant measured
/// values give R^2 = 0. Throws on fewer than 3 records or constant targets.
RegressionReport linear_fit_r2(std::span<const ControlEvalRecord> records, std::span<const double> dataset_values);

}  // namespace swg
