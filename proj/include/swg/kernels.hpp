#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version; the dispatching entry points at the bottom pick the OpenMP
// one. Tests compare the two.

#include <cstddef>
#include <span>

namespace swg::kernels {

/// Shape of a causal 1-D convolution: x [in_ch, len], w [out_ch, in_ch, taps], y [out_ch, len].
/// y[o, t] = b[o] + sum_{i,k} w[o, i, k] * x[i, t - (taps - 1) + k], zero before t = 0.
struct ConvShape {
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t taps = 0;
    std::size_t len = 0;
};

namespace serial {
void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
/// gx += d/dx, accumulating.
void conv1d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx);
/// gw += d/dw, gb += d/db, accumulating. gb may be empty.
void conv1d_backward_params(const ConvShape& s, std::span<const double> gy, std::span<const double> x,
                            std::span<double> gw, std::span<double> gb);
/// y[o] = b[o] + sum_i w[o, i] x[i]
void affine_forward(std::size_t in, std::size_t out, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
}  // namespace serial

namespace omp {
void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv1d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx);
void conv1d_backward_params(const ConvShape& s, std::span<const double> gy, std::span<const double> x,
                            std::span<double> gw, std::span<double> gb);
void affine_forward(std::size_t in, std::size_t out, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
}  // namespace omp

// Parallelism pays off only once the work is large enough to amortize the fork.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

inline void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                           std::span<const double> b, std::span<double> y) {
    if (s.out_ch * s.in_ch * s.taps * s.len >= kParallelThreshold)
        omp::conv1d_forward(s, x, w, b, y);
    else
        serial::conv1d_forward(s, x, w, b, y);
}

inline void conv1d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                                  std::span<double> gx) {
    if (s.out_ch * s.in_ch * s.taps * s.len >= kParallelThreshold)
        omp::conv1d_backward_input(s, gy, w, gx);
    else
        serial::conv1d_backward_input(s, gy, w, gx);
}

inline void conv1d_backward_params(const ConvShape& s, std::span<const double> gy, std::span<const double> x,
                                   std::span<double> gw, std::span<double> gb) {
    if (s.out_ch * s.in_ch * s.taps * s.len >= kParallelThreshold)
        omp::conv1d_backward_params(s, gy, x, gw, gb);
    else
        serial::conv1d_backward_params(s, gy, x, gw, gb);
}

inline void affine_forward(std::size_t in, std::size_t out, std::span<const double> x, std::span<const double> w,
                           std::span<const double> b, std::span<double> y) {
    if (in * out >= kParallelThreshold)
        omp::affine_forward(in, out, x, w, b, y);
    else
        serial::affine_forward(in, out, x, w, b, y);
}

}  // namespace swg::kernels
