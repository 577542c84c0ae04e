#include "swg/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace swg {

GaussianStats fit_gaussian(const EmbeddingMatrix& e) {
    if (e.data.size() != e.rows * e.cols) throw std::invalid_argument("fit_gaussian: malformed embedding matrix");
    if (e.rows <= e.cols)
        throw std::invalid_argument("fit_gaussian: need more rows than columns (" + std::to_string(e.rows) +
                                    " <= " + std::to_string(e.cols) + ")");
    const std::size_t n = e.rows, d = e.cols;
    GaussianStats g;
    g.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) g.mean[c] += e.at(r, c);
    for (double& m : g.mean) m /= static_cast<double>(n);

    g.cov.assign(d * d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) centered[c] = e.at(r, c) - g.mean[c];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) g.cov[i * d + j] += centered[i] * centered[j];
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            const double v = 0.5 * (g.cov[i * d + j] + g.cov[j * d + i]) * inv;
            g.cov[i * d + j] = v;
            g.cov[j * d + i] = v;
        }
    return g;
}

namespace {

using Mat = Eigen::MatrixXd;

Mat to_matrix(const std::vector<double>& v, std::size_t d) {
    Mat m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i * d + j];
    return m;
}

Mat sqrt_psd(const Mat& m) {
    const Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Tr((A^1/2 B A^1/2)^1/2) equals the sum of singular values of A^1/2 B^1/2.
// The SVD route keeps near-null eigenvalues from turning into sqrt(eps) error.
double cross_trace(const Mat& root_a, const Mat& root_b) {
    Eigen::JacobiSVD<Mat> svd(root_a * root_b);
    return svd.singularValues().sum();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    const std::size_t d = a.dim();
    if (b.dim() != d || a.cov.size() != d * d || b.cov.size() != d * d)
        throw std::invalid_argument("frechet_distance: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    double mean_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a.mean[i] - b.mean[i];
        mean_term += diff * diff;
    }
    const Mat sa = to_matrix(a.cov, d);
    const Mat sb = to_matrix(b.cov, d);
    const Mat root_a = sqrt_psd(sa);
    const double cross = cross_trace(root_a, sqrt_psd(sb));
    const double dist = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
    return std::max(0.0, dist);
}

double fad(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("fad: embedding dimension mismatch (" + std::to_string(a.cols) + " vs " +
                                    std::to_string(b.cols) + ")");
    return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

std::vector<double> mel_stats_embedding(const AudioClip& clip, const dsp::MelConfig& cfg) {
    const auto frames = dsp::mel_log_energies(clip, cfg);
    const std::size_t bands = static_cast<std::size_t>(cfg.n_bands);
    std::vector<double> out(2 * bands, 0.0);
    for (const auto& f : frames)
        for (std::size_t b = 0; b < bands; ++b) out[b] += f[b];
    const double n = static_cast<double>(frames.size());
    for (std::size_t b = 0; b < bands; ++b) out[b] /= n;
    for (const auto& f : frames)
        for (std::size_t b = 0; b < bands; ++b) {
            const double dv = f[b] - out[b];
            out[bands + b] += dv * dv;
        }
    for (std::size_t b = 0; b < bands; ++b) out[bands + b] = std::sqrt(out[bands + b] / n);
    return out;
}

namespace kernels {

namespace serial {
EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg) {
    const std::size_t dim = 2 * static_cast<std::size_t>(cfg.n_bands);
    EmbeddingMatrix m(clips.size(), dim);
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const auto row = mel_stats_embedding(clips[i], cfg);
        std::copy(row.begin(), row.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return m;
}
}  // namespace serial

namespace omp {
EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg) {
    const std::size_t dim = 2 * static_cast<std::size_t>(cfg.n_bands);
    EmbeddingMatrix m(clips.size(), dim);
    const auto n = static_cast<long>(clips.size());
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            const auto row = mel_stats_embedding(clips[static_cast<std::size_t>(i)], cfg);
            std::copy(row.begin(), row.end(), m.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * dim));
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = "clip " + std::to_string(i) + ": " + ex.what();
        }
    }
    if (!error.empty()) throw std::invalid_argument("embed_clips: " + error);
    return m;
}
}  // namespace omp

}  // namespace kernels

EmbeddingMatrix embed_clips(std::span<const AudioClip> clips, const dsp::MelConfig& cfg) {
    return kernels::omp::embed_clips(clips, cfg);
}

// ---------------------------------------------------------------------------

namespace {

int level_slot(double level) {
    if (std::abs(level - kLevelLow) < 1e-9) return 0;
    if (std::abs(level - kLevelMid) < 1e-9) return 1;
    if (std::abs(level - kLevelHigh) < 1e-9) return 2;
    return -1;
}

std::optional<double> pair_score(const std::map<std::size_t, double>& lower, const std::map<std::size_t, double>& upper,
                                 std::size_t& count) {
    std::size_t ok = 0;
    count = 0;
    for (const auto& [pair, lo] : lower) {
        auto it = upper.find(pair);
        if (it == upper.end()) continue;
        ++count;
        if (it->second > lo) ++ok;
    }
    if (count == 0) return std::nullopt;
    return static_cast<double>(ok) / static_cast<double>(count);
}

}  // namespace

OrderingReport ordering_accuracy(std::span<const ControlEvalRecord> records) {
    std::map<std::size_t, double> by_level[3];
    for (const auto& r : records) {
        if (!r.level) continue;
        const int s = level_slot(*r.level);
        if (s < 0) continue;
        by_level[s][r.pair] = r.measured;
    }
    OrderingReport rep;
    rep.e1 = pair_score(by_level[0], by_level[2], rep.n1);
    rep.e2 = pair_score(by_level[0], by_level[1], rep.n2);
    rep.e3 = pair_score(by_level[1], by_level[2], rep.n3);
    return rep;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty set");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

MaeReport mae_quantile(std::span<const ControlEvalRecord> records, std::span<const double> dataset_values) {
    if (dataset_values.empty()) throw std::invalid_argument("mae_quantile: empty dataset values");
    std::vector<double> v(dataset_values.begin(), dataset_values.end());
    MaeReport rep;
    rep.q20 = quantile(v, 0.2);
    rep.q50 = quantile(v, 0.5);
    rep.q80 = quantile(v, 0.8);
    auto region = [&](double lo, double hi, std::size_t& n) -> std::optional<double> {
        double acc = 0.0;
        n = 0;
        for (const auto& r : records) {
            if (r.target >= lo && r.target <= hi) {
                acc += std::abs(r.measured - r.target);
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return acc / static_cast<double>(n);
    };
    rep.f1 = region(rep.q20, rep.q50, rep.n1);
    rep.f2 = region(rep.q50, rep.q80, rep.n2);
    rep.f3 = region(rep.q20, rep.q80, rep.n3);
    return rep;
}

RegressionReport linear_fit_r2(std::span<const ControlEvalRecord> records, std::span<const double> dataset_values) {
    if (dataset_values.empty()) throw std::invalid_argument("linear_fit_r2: empty dataset values");
    std::vector<double> v(dataset_values.begin(), dataset_values.end());
    const double lo = quantile(v, 0.2), hi = quantile(v, 0.8);
    std::vector<double> xs, ys;
    for (const auto& r : records) {
        if (r.target >= lo && r.target <= hi) {
            xs.push_back(r.target);
            ys.push_back(r.measured);
        }
    }
    if (xs.size() < 3)
        throw std::invalid_argument("linear_fit_r2: need at least 3 records in [q20, q80], got " +
                                    std::to_string(xs.size()));
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("linear_fit_r2: targets have zero variance");
    RegressionReport rep;
    rep.n = xs.size();
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
    if (syy <= 0.0) {
        rep.r2 = 0.0;
        return rep;
    }
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (rep.slope * xs[i] + rep.intercept);
        ss_res += e * e;
    }
    rep.r2 = 1.0 - ss_res / syy;
    return rep;
}

}  // namespace swg
