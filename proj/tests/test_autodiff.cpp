#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "swg/autodiff.hpp"
#include "swg/descriptors.hpp"
#include "swg/dsp.hpp"
#include "swg/gradcheck.hpp"
#include "swg/kernels.hpp"

using namespace swg;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// One-pole low-passed noise; keeps descriptors away from logistic saturation.
std::vector<double> colored(std::size_t n, std::uint64_t seed, double pole) {
    auto v = randn(n, seed);
    double y = 0.0;
    for (auto& x : v) x = y = pole * y + (1.0 - pole) * x;
    return v;
}

}  // namespace

TEST_CASE("sin at pi/2 and its derivative") {
    ad::Graph g;
    auto x = g.variable({std::numbers::pi / 2}, {1});
    auto y = ad::sin(x);
    CHECK_THAT(y.item(), WithinAbs(1.0, 1e-15));
    g.backward(y);
    CHECK_THAT(x.grad()[0], WithinAbs(0.0, 1e-15));
}

TEST_CASE("causal conv impulse response is the kernel") {
    ad::Graph g;
    std::vector<double> impulse(16, 0.0);
    impulse[3] = 1.0;
    const auto kernel = randn(9, 1);
    auto y = ad::causal_conv1d(g.constant(impulse, {1, 16}), g.constant(kernel, {1, 1, 9}), {});
    REQUIRE(y.shape() == ad::Shape{1, 16});
    // y[t] = sum_k w[k] x[t - 8 + k]; an impulse at 3 gives w[8 - (t - 3)] for t in [3, 11]
    for (std::size_t t = 0; t < 16; ++t) {
        const double expect = (t >= 3 && t <= 11) ? kernel[8 - (t - 3)] : 0.0;
        CHECK_THAT(y.value()[t], WithinAbs(expect, 1e-15));
    }
}

TEST_CASE("causal conv output ignores future input") {
    const auto x = randn(2 * 40, 2);
    auto w = randn(3 * 2 * 9, 3);
    auto x2 = x;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t t = 25; t < 40; ++t) x2[c * 40 + t] += 5.0;
    ad::Graph g;
    auto a = ad::causal_conv1d(g.constant(x, {2, 40}), g.constant(w, {3, 2, 9}), {});
    auto b = ad::causal_conv1d(g.constant(x2, {2, 40}), g.constant(w, {3, 2, 9}), {});
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t t = 0; t < 25; ++t) CHECK(a.value()[o * 40 + t] == b.value()[o * 40 + t]);
}

TEST_CASE("real_dft_power gradient matches finite differences") {
    const auto x = randn(64, 4);
    const auto proj = randn(33, 5);
    auto f = [&](ad::Tensor t) {
        auto p = ad::real_dft_power(t);
        return ad::dot(p, t.graph().constant(proj, {33}));
    };
    CHECK(ad::grad_check(f, x, {64}) < 1e-4);
}

TEST_CASE("real_dft_power forward equals squared DFT magnitude") {
    for (std::size_t n : {64u, 50u}) {
        const auto x = randn(n, 6);
        ad::Graph g;
        auto p = ad::real_dft_power(g.constant(x, {n}));
        const auto X = dsp::dft(std::span<const double>(x));
        REQUIRE(p.size() == n / 2 + 1);
        for (std::size_t k = 0; k <= n / 2; ++k) CHECK(std::abs(p.value()[k] - std::norm(X[k])) < 1e-9 * (1 + std::norm(X[k])));
    }
}

TEST_CASE("backward of sum gives ones") {
    ad::Graph g;
    auto x = g.variable(randn(12, 7), {3, 4});
    g.backward(ad::sum(x));
    for (double v : x.grad()) CHECK(v == 1.0);
}

TEST_CASE("backward of mean of squares gives 2x/n") {
    const auto v = randn(10, 8);
    ad::Graph g;
    auto x = g.variable(v, {10});
    g.backward(ad::mean(ad::square(x)));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK_THAT(x.grad()[i], WithinAbs(2 * v[i] / 10, 1e-15));
}

TEST_CASE("backward rejects a non-scalar root") {
    ad::Graph g;
    auto x = g.variable({1, 2}, {2});
    CHECK_THROWS(g.backward(x));
}

TEST_CASE("shape mismatch is an error") {
    ad::Graph g;
    auto a = g.variable({1, 2, 3}, {3});
    auto b = g.variable({1, 2}, {2});
    CHECK_THROWS(ad::add(a, b));
    CHECK_THROWS(ad::mul(a, b));
    CHECK_THROWS(ad::affine(a, g.constant(randn(4, 1), {2, 2}), {}));
    CHECK_THROWS(g.constant({1, 2, 3}, {2, 2}));
    // scalar broadcast is allowed
    CHECK_NOTHROW(ad::add(a, g.scalar(1.0)));
}

TEST_CASE("division by a near-zero denominator uses the floor") {
    ad::Graph g;
    auto a = g.variable({1.0, 1.0}, {2});
    auto d = g.variable({0.0, -1e-14}, {2});
    auto q = ad::div(a, d);
    CHECK(std::isfinite(q.value()[0]));
    CHECK_THAT(std::abs(q.value()[0]), WithinAbs(1e12, 1.0));
    CHECK_THAT(q.value()[1], WithinAbs(-1e12, 1.0));
    g.backward(ad::sum(q));
    for (double v : d.grad()) CHECK(v == 0.0);
    for (double v : a.grad()) CHECK(std::isfinite(v));
}

TEST_CASE("log and sqrt floor their arguments") {
    ad::Graph g;
    auto x = g.variable({0.0}, {1});
    CHECK_THAT(ad::log(x).item(), WithinAbs(std::log(1e-12), 1e-12));
    CHECK_THAT(ad::sqrt(x).item(), WithinAbs(1e-6, 1e-18));
}

TEST_CASE("grad_check reports near-zero error for linear maps") {
    CHECK(ad::grad_check([](ad::Tensor t) { return ad::sum(t); }, randn(20, 9), {20}) < 1e-10);
}

TEST_CASE("grad_check on mean(sigmoid(x))") {
    CHECK(ad::grad_check([](ad::Tensor t) { return ad::mean(ad::sigmoid(t)); }, randn(16, 10), {16}) < 1e-6);
}

TEST_CASE("grad_check on brightness and warmth") {
    const auto x256 = colored(256, 11, 0.6);
    CHECK(ad::grad_check([](ad::Tensor t) { return descriptors::brightness(t, 16000); }, x256, {256}) < 1e-4);
    const auto x512 = randn(512, 12, 0.1);
    CHECK(ad::grad_check([](ad::Tensor t) { return descriptors::warmth(t, 16000); }, x512, {512}) < 1e-4);
}

TEST_CASE("every op passes the finite-difference suite") {
    GradCheckOptions opts;
    opts.seed = 21;
    const auto cases = gradcheck_suite(opts);
    REQUIRE(cases.size() > 20);
    for (const auto& c : cases) {
        INFO(c.name);
        CHECK(c.inputs >= 20);
        CHECK(c.max_error < 1e-4);
    }
}

TEST_CASE("a leaf used twice accumulates both paths") {
    const auto v = randn(8, 13);
    ad::Graph g1;
    auto x1 = g1.variable(v, {8});
    g1.backward(ad::sum(ad::add(ad::mul(x1, x1), ad::sin(x1))));
    ad::Graph g2;
    auto x2 = g2.variable(v, {8});
    g2.backward(ad::sum(ad::add(ad::square(x2), ad::sin(x2))));
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK_THAT(x1.grad()[i], WithinAbs(x2.grad()[i], 1e-14));
        CHECK_THAT(x1.grad()[i], WithinAbs(2 * v[i] + std::cos(v[i]), 1e-14));
    }
}

TEST_CASE("parameters accumulate across backward passes") {
    ad::Param p("w", {3}, {1.0, 2.0, 3.0});
    for (int pass = 0; pass < 2; ++pass) {
        ad::Graph g;
        g.backward(ad::sum(ad::scale(g.parameter(p), 2.0)));
    }
    for (double v : p.grad) CHECK(v == 4.0);
    p.zero_grad();
    for (double v : p.grad) CHECK(v == 0.0);

    ad::Graph g;
    auto frozen = g.parameter(p, false);
    CHECK_FALSE(frozen.requires_grad());
}

TEST_CASE("DFT is adjoint to its conjugate transpose") {
    // <F x, y> = <x, F^H y>, with F^H y = N idft(y)
    for (std::size_t n : {64u, 30u}) {
        const auto xr = randn(n, 14), xi = randn(n, 15), yr = randn(n, 16), yi = randn(n, 17);
        std::vector<cplx> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = {xr[i], xi[i]};
            y[i] = {yr[i], yi[i]};
        }
        const auto Fx = dsp::dft(std::span<const cplx>(x));
        auto Fhy = dsp::idft(y);
        cplx lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lhs += Fx[i] * std::conj(y[i]);
            rhs += x[i] * std::conj(static_cast<double>(n) * Fhy[i]);
        }
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(lhs));
    }
}

TEST_CASE("values stay finite through forward and backward") {
    ad::Graph g;
    auto x = g.variable(randn(32, 18, 30.0), {32});
    auto y = ad::sum(ad::add(ad::sigmoid(x), ad::log(ad::exp(ad::scale(x, 0.01)))));
    g.backward(y);
    for (double v : x.grad()) CHECK(std::isfinite(v));
    CHECK(std::isfinite(y.item()));
}

TEST_CASE("serial and parallel conv kernels agree") {
    for (const kernels::ConvShape s : {kernels::ConvShape{3, 5, 9, 37}, kernels::ConvShape{16, 32, 9, 512},
                                       kernels::ConvShape{1, 1, 1, 8}}) {
        const auto x = randn(s.in_ch * s.len, 20);
        const auto w = randn(s.out_ch * s.in_ch * s.taps, 21);
        const auto b = randn(s.out_ch, 22);
        const auto gy = randn(s.out_ch * s.len, 23);

        std::vector<double> ys(s.out_ch * s.len), yp(ys.size());
        kernels::serial::conv1d_forward(s, x, w, b, ys);
        kernels::omp::conv1d_forward(s, x, w, b, yp);
        for (std::size_t i = 0; i < ys.size(); ++i) CHECK_THAT(yp[i], WithinAbs(ys[i], 1e-10));

        std::vector<double> gxs(x.size(), 0.5), gxp(x.size(), 0.5);
        kernels::serial::conv1d_backward_input(s, gy, w, gxs);
        kernels::omp::conv1d_backward_input(s, gy, w, gxp);
        for (std::size_t i = 0; i < gxs.size(); ++i) CHECK_THAT(gxp[i], WithinAbs(gxs[i], 1e-10));

        std::vector<double> gws(w.size(), 0.25), gwp(w.size(), 0.25), gbs(b.size(), 1.0), gbp(b.size(), 1.0);
        kernels::serial::conv1d_backward_params(s, gy, x, gws, gbs);
        kernels::omp::conv1d_backward_params(s, gy, x, gwp, gbp);
        for (std::size_t i = 0; i < gws.size(); ++i) CHECK_THAT(gwp[i], WithinAbs(gws[i], 1e-9));
        for (std::size_t i = 0; i < gbs.size(); ++i) CHECK_THAT(gbp[i], WithinAbs(gbs[i], 1e-9));
    }
}

TEST_CASE("serial and parallel affine kernels agree") {
    const std::size_t in = 300, out = 250;
    const auto x = randn(in, 30), w = randn(in * out, 31), b = randn(out, 32);
    std::vector<double> ys(out), yp(out);
    kernels::serial::affine_forward(in, out, x, w, b, ys);
    kernels::omp::affine_forward(in, out, x, w, b, yp);
    for (std::size_t i = 0; i < out; ++i) CHECK_THAT(yp[i], WithinAbs(ys[i], 1e-10));
}
