#include "swg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "swg/autodiff.hpp"
#include "swg/descriptors.hpp"

namespace swg {

namespace {

using ad::Shape;
using ad::Tensor;

struct Gen {
    std::mt19937_64 rng;
    std::vector<double> normal(std::size_t n, double sd = 1.0) {
        std::normal_distribution<double> d(0.0, sd);
        std::vector<double> v(n);
        for (auto& x : v) x = d(rng);
        return v;
    }
    /// Values with |x| >= gap, for ops with a kink at 0.
    std::vector<double> away_from_zero(std::size_t n, double gap = 0.05) {
        auto v = normal(n);
        for (auto& x : v)
            if (std::abs(x) < gap) x = x < 0 ? x - gap : x + gap;
        return v;
    }
    std::vector<double> positive(std::size_t n) {
        auto v = normal(n);
        for (auto& x : v) x = std::abs(x) + 0.5;
        return v;
    }
    std::size_t size(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
};

/// sum(r * y) for a fixed random r
Tensor project(const Tensor& y, const std::vector<double>& r) {
    auto& g = y.graph();
    auto flat = ad::reshape(y, {y.size()});
    return ad::dot(flat, g.constant(r, {r.size()}));
}

using OpFn = std::function<Tensor(const Tensor&)>;

/// One-pole filtered noise with a random pole and RMS 0.05, so descriptor values
/// spread over the scale instead of saturating as they do for white noise.
std::vector<double> colored_noise(Gen& g, std::size_t n) {
    auto x = g.normal(n);
    const double a = std::uniform_real_distribution<double>(0.3, 0.95)(g.rng);
    double prev = 0.0, ss = 0.0;
    for (auto& v : x) {
        v = prev = v + a * prev;
        ss += v * v;
    }
    const double k = 0.05 / std::sqrt(ss / static_cast<double>(n));
    for (auto& v : x) v *= k;
    return x;
}

struct Case {
    std::string name;
    /// Draws an input and builds the function under test for it.
    std::function<std::pair<std::vector<double>, Shape>(Gen&, std::size_t len, OpFn&)> make;
};

Tensor c(const Tensor& like, std::vector<double> v, Shape s) { return like.graph().constant(std::move(v), std::move(s)); }

std::vector<Case> op_cases() {
    std::vector<Case> cs;
    auto unary = [&](std::string name, std::function<Tensor(const Tensor&)> op, int domain) {
        cs.push_back({name, [op, domain](Gen& g, std::size_t n, OpFn& f) {
                          auto x = domain == 1 ? g.positive(n) : domain == 2 ? g.away_from_zero(n) : g.normal(n);
                          f = op;
                          return std::pair{x, Shape{n}};
                      }});
    };
    unary("neg", [](const Tensor& x) { return ad::neg(x); }, 0);
    unary("scale", [](const Tensor& x) { return ad::scale(x, -1.7); }, 0);
    unary("add_scalar", [](const Tensor& x) { return ad::add_scalar(x, 0.3); }, 0);
    unary("square", [](const Tensor& x) { return ad::square(x); }, 0);
    unary("abs", [](const Tensor& x) { return ad::abs(x); }, 2);
    unary("sqrt", [](const Tensor& x) { return ad::sqrt(x); }, 1);
    unary("log", [](const Tensor& x) { return ad::log(x); }, 1);
    unary("exp", [](const Tensor& x) { return ad::exp(x); }, 0);
    unary("sigmoid", [](const Tensor& x) { return ad::sigmoid(x); }, 0);
    unary("sin", [](const Tensor& x) { return ad::sin(x); }, 0);
    unary("cos", [](const Tensor& x) { return ad::cos(x); }, 0);
    unary("leaky_relu", [](const Tensor& x) { return ad::leaky_relu(x, 0.2); }, 2);
    unary("relu", [](const Tensor& x) { return ad::relu(x); }, 2);
    unary("sum", [](const Tensor& x) { return ad::sum(x); }, 0);
    unary("mean", [](const Tensor& x) { return ad::mean(x); }, 0);
    unary("real_dft_power", [](const Tensor& x) { return ad::real_dft_power(x); }, 0);

    auto binary = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op, bool pos_other) {
        for (int side = 0; side < 2; ++side) {
            cs.push_back({name + (side == 0 ? "[a]" : "[b]"), [op, side, pos_other](Gen& g, std::size_t n, OpFn& f) {
                              auto other = pos_other && side == 0 ? g.positive(n) : g.normal(n);
                              auto x = pos_other && side == 1 ? g.positive(n) : g.normal(n);
                              f = [op, side, other, n](const Tensor& t) {
                                  auto o = c(t, other, {n});
                                  return side == 0 ? op(t, o) : op(o, t);
                              };
                              return std::pair{x, Shape{n}};
                          }});
        }
    };
    binary("add", [](const Tensor& a, const Tensor& b) { return ad::add(a, b); }, false);
    binary("sub", [](const Tensor& a, const Tensor& b) { return ad::sub(a, b); }, false);
    binary("mul", [](const Tensor& a, const Tensor& b) { return ad::mul(a, b); }, false);
    binary("div", [](const Tensor& a, const Tensor& b) { return ad::div(a, b); }, true);
    binary("dot", [](const Tensor& a, const Tensor& b) { return ad::dot(a, b); }, false);

    cs.push_back({"mul[scalar]", [](Gen& g, std::size_t n, OpFn& f) {
                      auto other = g.normal(n);
                      f = [other, n](const Tensor& s) { return ad::mul(s, c(s, other, {n})); };
                      return std::pair{g.normal(1), Shape{1}};
                  }});
    cs.push_back({"reshape", [](Gen& g, std::size_t n, OpFn& f) {
                      f = [n](const Tensor& x) { return ad::reshape(x, {1, n}); };
                      return std::pair{g.normal(n), Shape{n}};
                  }});
    cs.push_back({"concat", [](Gen& g, std::size_t n, OpFn& f) {
                      auto other = g.normal(n);
                      f = [other, n](const Tensor& x) { return ad::concat(c(x, other, {n}), ad::concat(x, x)); };
                      return std::pair{g.normal(n), Shape{n}};
                  }});
    cs.push_back({"slice", [](Gen& g, std::size_t n, OpFn& f) {
                      const std::size_t off = g.size(0, n - 1);
                      const std::size_t len = g.size(1, n - off);
                      f = [off, len](const Tensor& x) { return ad::slice(x, off, len); };
                      return std::pair{g.normal(n), Shape{n}};
                  }});
    // affine: check w.r.t. x, w and b in turn
    for (int part = 0; part < 3; ++part) {
        cs.push_back({std::string("affine[") + "xwb"[part] + "]", [part](Gen& g, std::size_t n, OpFn& f) {
                          const std::size_t in = std::max<std::size_t>(1, n / 8), out = g.size(1, 12);
                          auto x = g.normal(in), w = g.normal(out * in), b = g.normal(out);
                          f = [=](const Tensor& t) {
                              auto X = part == 0 ? t : c(t, x, {in});
                              auto W = part == 1 ? t : c(t, w, {out, in});
                              auto B = part == 2 ? t : c(t, b, {out});
                              return ad::affine(X, W, B);
                          };
                          if (part == 0) return std::pair{x, Shape{in}};
                          if (part == 1) return std::pair{w, Shape{out, in}};
                          return std::pair{b, Shape{out}};
                      }});
    }
    for (int part = 0; part < 3; ++part) {
        cs.push_back({std::string("causal_conv1d[") + "xwb"[part] + "]", [part](Gen& g, std::size_t n, OpFn& f) {
                          const std::size_t cin = g.size(1, 3), cout = g.size(1, 3), k = 9;
                          const std::size_t len = std::max<std::size_t>(1, n / cin);
                          auto x = g.normal(cin * len), w = g.normal(cout * cin * k, 0.3), b = g.normal(cout);
                          f = [=](const Tensor& t) {
                              auto X = part == 0 ? t : c(t, x, {cin, len});
                              auto W = part == 1 ? t : c(t, w, {cout, cin, k});
                              auto B = part == 2 ? t : c(t, b, {cout});
                              return ad::causal_conv1d(X, W, B);
                          };
                          if (part == 0) return std::pair{x, Shape{cin, len}};
                          if (part == 1) return std::pair{w, Shape{cout, cin, k}};
                          return std::pair{b, Shape{cout}};
                      }});
    }
    auto rows = [&](std::string name, std::function<Tensor(const Tensor&)> op, bool even) {
        cs.push_back({name, [op, even](Gen& g, std::size_t n, OpFn& f) {
                          const std::size_t ch = g.size(1, 4);
                          std::size_t len = std::max<std::size_t>(2, n / ch);
                          if (even && len % 2) ++len;
                          f = op;
                          return std::pair{g.normal(ch * len), Shape{ch, len}};
                      }});
    };
    rows("avg_upsample2x", [](const Tensor& x) { return ad::avg_upsample2x(x); }, false);
    rows("avg_downsample2x", [](const Tensor& x) { return ad::avg_downsample2x(x); }, true);
    rows("mean_time", [](const Tensor& x) { return ad::mean_time(x); }, false);
    for (int side = 0; side < 2; ++side) {
        for (int kind = 0; kind < 2; ++kind) {
            const std::string name = std::string(kind == 0 ? "mul_rows" : "add_rows") + (side == 0 ? "[x]" : "[s]");
            cs.push_back({name, [side, kind](Gen& g, std::size_t n, OpFn& f) {
                              const std::size_t ch = g.size(1, 4), len = std::max<std::size_t>(1, n / ch);
                              auto x = g.normal(ch * len), s = g.normal(ch);
                              f = [=](const Tensor& t) {
                                  auto X = side == 0 ? t : c(t, x, {ch, len});
                                  auto S = side == 1 ? t : c(t, s, {ch});
                                  return kind == 0 ? ad::mul_rows(X, S) : ad::add_rows(X, S);
                              };
                              if (side == 0) return std::pair{x, Shape{ch, len}};
                              return std::pair{s, Shape{ch}};
                          }});
        }
        cs.push_back({std::string("outer") + (side == 0 ? "[u]" : "[v]"), [side](Gen& g, std::size_t n, OpFn& f) {
                          const std::size_t a = g.size(1, 6), b = std::max<std::size_t>(1, n / a);
                          auto u = g.normal(a), v = g.normal(b);
                          f = [=](const Tensor& t) {
                              auto U = side == 0 ? t : c(t, u, {a});
                              auto V = side == 1 ? t : c(t, v, {b});
                              return ad::outer(U, V);
                          };
                          if (side == 0) return std::pair{u, Shape{a}};
                          return std::pair{v, Shape{b}};
                      }});
    }
    return cs;
}

}  // namespace

std::vector<GradCheckCase> gradcheck_suite(const GradCheckOptions& opts) {
    std::vector<GradCheckCase> out;
    Gen gen{std::mt19937_64(opts.seed)};

    for (const auto& cs : op_cases()) {
        GradCheckCase r{cs.name, 0, 0, 0.0};
        for (std::size_t i = 0; i < opts.inputs_per_case; ++i) {
            const std::size_t n = gen.size(2, opts.max_op_length);
            OpFn op;
            auto [x, shape] = cs.make(gen, n, op);
            // The projection size is only known after a forward pass.
            std::size_t out_size;
            {
                ad::Graph g;
                out_size = op(g.constant(x, shape)).size();
            }
            const auto proj = gen.normal(out_size);
            const double err = ad::grad_check([&](Tensor t) { return project(op(t), proj); }, x, shape, opts.h);
            r.max_error = std::max(r.max_error, err);
            r.max_length = std::max(r.max_length, ad::numel(shape));
            ++r.inputs;
        }
        out.push_back(r);
    }

    std::vector<std::size_t> lengths;
    for (std::size_t n = kMinDescriptorLength * 2; n <= opts.max_descriptor_length; n *= 2) lengths.push_back(n);
    if (lengths.empty()) lengths.push_back(opts.max_descriptor_length);
    lengths.push_back(300);  // a non-power-of-two length exercises the direct DFT path
    for (auto d : kAllDescriptors) {
        GradCheckCase r{to_string(d), 0, 0, 0.0};
        for (std::size_t i = 0; i < opts.inputs_per_case; ++i) {
            const std::size_t n = lengths[i % lengths.size()];
            const auto x = colored_noise(gen, n);
            const double err =
                ad::grad_check([d](Tensor t) { return descriptors::compute(d, t, 16000); }, x, {n}, opts.h);
            r.max_error = std::max(r.max_error, err);
            r.max_length = std::max(r.max_length, n);
            ++r.inputs;
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace swg
