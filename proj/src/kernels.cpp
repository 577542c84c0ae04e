#include "swg/kernels.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace swg::kernels {

namespace {

// Inner loops shared by both variants. Each one touches a single output row
// so the OpenMP versions only need to distribute rows.

inline void conv_row_forward(const ConvShape& s, const double* x, const double* w_row, double bias, double* y_row) {
    const std::size_t len = s.len;
    for (std::size_t t = 0; t < len; ++t) y_row[t] = bias;
    for (std::size_t i = 0; i < s.in_ch; ++i) {
        const double* xi = x + i * len;
        const double* wk = w_row + i * s.taps;
        for (std::size_t k = 0; k < s.taps; ++k) {
            const std::size_t shift = s.taps - 1 - k;
            if (shift >= len) continue;
            const double c = wk[k];
            double* __restrict out = y_row + shift;
            const double* __restrict in = xi;
            const std::size_t n = len - shift;
            for (std::size_t t = 0; t < n; ++t) out[t] += c * in[t];
        }
    }
}

inline void conv_row_backward_input(const ConvShape& s, const double* gy, const double* w, std::size_t i,
                                    double* gx_row) {
    const std::size_t len = s.len;
    for (std::size_t o = 0; o < s.out_ch; ++o) {
        const double* go = gy + o * len;
        const double* wk = w + (o * s.in_ch + i) * s.taps;
        for (std::size_t k = 0; k < s.taps; ++k) {
            const std::size_t shift = s.taps - 1 - k;
            if (shift >= len) continue;
            const double c = wk[k];
            double* __restrict out = gx_row;
            const double* __restrict in = go + shift;
            const std::size_t n = len - shift;
            for (std::size_t t = 0; t < n; ++t) out[t] += c * in[t];
        }
    }
}

inline void conv_row_backward_params(const ConvShape& s, const double* gy, const double* x, std::size_t o,
                                     double* gw_row, double* gb) {
    const std::size_t len = s.len;
    const double* go = gy + o * len;
    if (gb != nullptr) {
        double acc = 0.0;
        for (std::size_t t = 0; t < len; ++t) acc += go[t];
        gb[o] += acc;
    }
    for (std::size_t i = 0; i < s.in_ch; ++i) {
        const double* xi = x + i * len;
        for (std::size_t k = 0; k < s.taps; ++k) {
            const std::size_t shift = s.taps - 1 - k;
            if (shift >= len) continue;
            const std::size_t n = len - shift;
            const double* a = go + shift;
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) acc += a[t] * xi[t];
            gw_row[i * s.taps + k] += acc;
        }
    }
}

inline double affine_row(std::size_t in, const double* x, const double* w_row, double bias) {
    double acc = bias;
    for (std::size_t i = 0; i < in; ++i) acc += w_row[i] * x[i];
    return acc;
}

}  // namespace

namespace serial {

void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    for (std::size_t o = 0; o < s.out_ch; ++o)
        conv_row_forward(s, x.data(), w.data() + o * s.in_ch * s.taps, b.empty() ? 0.0 : b[o], y.data() + o * s.len);
}

void conv1d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx) {
    for (std::size_t i = 0; i < s.in_ch; ++i) conv_row_backward_input(s, gy.data(), w.data(), i, gx.data() + i * s.len);
}

void conv1d_backward_params(const ConvShape& s, std::span<const double> gy, std::span<const double> x,
                            std::span<double> gw, std::span<double> gb) {
    for (std::size_t o = 0; o < s.out_ch; ++o)
        conv_row_backward_params(s, gy.data(), x.data(), o, gw.data() + o * s.in_ch * s.taps,
                                 gb.empty() ? nullptr : gb.data());
}

void affine_forward(std::size_t in, std::size_t out, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    for (std::size_t o = 0; o < out; ++o) y[o] = affine_row(in, x.data(), w.data() + o * in, b.empty() ? 0.0 : b[o]);
}

}  // namespace serial

namespace omp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

/// cols[(i, k), t] = x[i, t - (taps - 1) + k], zero before t = 0.
RowMat im2col(const ConvShape& s, const double* x) {
    RowMat cols(s.in_ch * s.taps, s.len);
    const auto rows = static_cast<long>(s.in_ch * s.taps);
#pragma omp parallel for schedule(static)
    for (long r = 0; r < rows; ++r) {
        const std::size_t i = static_cast<std::size_t>(r) / s.taps;
        const std::size_t shift = s.taps - 1 - static_cast<std::size_t>(r) % s.taps;
        double* out = cols.data() + static_cast<std::size_t>(r) * s.len;
        const double* in = x + i * s.len;
        const std::size_t lead = std::min(shift, s.len);
        std::fill_n(out, lead, 0.0);
        std::copy_n(in, s.len - lead, out + lead);
    }
    return cols;
}

}  // namespace

void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    const RowMat cols = im2col(s, x.data());
    ConstMap W(w.data(), static_cast<long>(s.out_ch), static_cast<long>(s.in_ch * s.taps));
    MutMap Y(y.data(), static_cast<long>(s.out_ch), static_cast<long>(s.len));
    Y.noalias() = W * cols;
    if (!b.empty())
        for (std::size_t o = 0; o < s.out_ch; ++o) Y.row(static_cast<long>(o)).array() += b[o];
}

void conv1d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx) {
    ConstMap W(w.data(), static_cast<long>(s.out_ch), static_cast<long>(s.in_ch * s.taps));
    ConstMap G(gy.data(), static_cast<long>(s.out_ch), static_cast<long>(s.len));
    const RowMat z = W.transpose() * G;  // [(i, k), t]
    const auto n = static_cast<long>(s.in_ch);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        double* out = gx.data() + static_cast<std::size_t>(i) * s.len;
        for (std::size_t k = 0; k < s.taps; ++k) {
            const std::size_t shift = s.taps - 1 - k;
            if (shift >= s.len) continue;
            const double* zr = z.data() + (static_cast<std::size_t>(i) * s.taps + k) * s.len + shift;
            const std::size_t m = s.len - shift;
            for (std::size_t t = 0; t < m; ++t) out[t] += zr[t];
        }
    }
}

void conv1d_backward_params(const ConvShape& s, std::span<const double> gy, std::span<const double> x,
                            std::span<double> gw, std::span<double> gb) {
    const RowMat cols = im2col(s, x.data());
    ConstMap G(gy.data(), static_cast<long>(s.out_ch), static_cast<long>(s.len));
    MutMap GW(gw.data(), static_cast<long>(s.out_ch), static_cast<long>(s.in_ch * s.taps));
    GW.noalias() += G * cols.transpose();
    if (!gb.empty())
        for (std::size_t o = 0; o < s.out_ch; ++o) {
            // plain loop: Eigen's vectorized sum depends on the pointer alignment
            double acc = 0.0;
            for (std::size_t t = 0; t < s.len; ++t) acc += gy[o * s.len + t];
            gb[o] += acc;
        }
}

void affine_forward(std::size_t in, std::size_t out, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
    const auto n = static_cast<long>(out);
#pragma omp parallel for schedule(static)
    for (long o = 0; o < n; ++o) {
        const auto uo = static_cast<std::size_t>(o);
        y[uo] = affine_row(in, x.data(), w.data() + uo * in, b.empty() ? 0.0 : b[uo]);
    }
}

}  // namespace omp

}  // namespace swg::kernels
