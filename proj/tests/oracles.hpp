#pragma once

// Brute-force reference versions of the evaluation metrics, shared by the unit
// tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "swg/metrics.hpp"

namespace oracle {

inline std::optional<double> naive_ordering(const std::vector<swg::ControlEvalRecord>& recs, double lo, double hi) {
    std::size_t total = 0, good = 0;
    for (const auto& a : recs) {
        if (!a.level || *a.level != lo) continue;
        for (const auto& b : recs) {
            if (!b.level || *b.level != hi || b.pair != a.pair) continue;
            ++total;
            if (b.measured > a.measured) ++good;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(good) / static_cast<double>(total);
}

inline double naive_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline std::optional<double> naive_mae(const std::vector<swg::ControlEvalRecord>& recs, double lo, double hi) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : recs)
        if (r.target >= lo && r.target <= hi) {
            s += std::abs(r.measured - r.target);
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

struct Fit {
    double slope, intercept, r2;
    std::size_t n;
};

// Closed-form simple regression from raw sums.
inline Fit naive_fit(const std::vector<swg::ControlEvalRecord>& recs, double lo, double hi) {
    long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& r : recs)
        if (r.target >= lo && r.target <= hi) {
            const long double x = r.target, y = r.measured;
            n += 1;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
    const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const long double intercept = (sy - slope * sx) / n;
    const long double ss_tot = syy - sy * sy / n;
    const long double ss_res = syy - 2 * slope * sxy - 2 * intercept * sy + slope * slope * sxx +
                               2 * slope * intercept * sx + n * intercept * intercept;
    const long double r2 = ss_tot <= 0 ? 0.0L : 1.0L - ss_res / ss_tot;
    return {static_cast<double>(slope), static_cast<double>(intercept), static_cast<double>(r2),
            static_cast<std::size_t>(n)};
}

/// Random pairs over the three levels; some levels missing, some ties.
inline std::vector<swg::ControlEvalRecord> random_records(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pairs_d(5, 60);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 12.0);
    std::vector<swg::ControlEvalRecord> out;
    const int pairs = pairs_d(rng);
    const double skip = 0.2 * u(rng);
    for (int p = 0; p < pairs; ++p)
        for (double level : {swg::kLevelLow, swg::kLevelMid, swg::kLevelHigh}) {
            if (u(rng) < skip) continue;
            swg::ControlEvalRecord r;
            r.pair = static_cast<std::size_t>(p);
            r.level = level;
            r.target = 100.0 * level + 5.0 * (u(rng) - 0.5);
            r.measured = r.target + noise(rng);
            if (u(rng) < 0.1) r.measured = std::round(r.measured / 20.0) * 20.0;
            out.push_back(r);
        }
    return out;
}

inline std::vector<double> random_dataset(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> v(std::uniform_int_distribution<int>(10, 200)(rng));
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace oracle
