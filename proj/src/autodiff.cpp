#include "swg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "swg/dsp.hpp"
#include "swg/kernels.hpp"

namespace swg::ad {

std::size_t numel(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Param::Param(std::string n, Shape s, std::vector<double> v)
    : name(std::move(n)), shape(std::move(s)), value(std::move(v)), grad(value.size(), 0.0) {
    if (numel(shape) != value.size())
        throw std::invalid_argument("param " + name + ": shape " + shape_str(shape) + " does not match data size");
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

// ---------------------------------------------------------------------------
// Tensor / Graph

Graph& Tensor::graph() const {
    if (graph_ == nullptr) throw std::logic_error("use of an empty tensor handle");
    return *graph_;
}

const Shape& Tensor::shape() const { return graph().nodes_[id_].shape; }
std::size_t Tensor::size() const { return graph().nodes_[id_].value.size(); }
std::span<const double> Tensor::value() const { return graph().nodes_[id_].value; }
std::span<const double> Tensor::grad() const { return graph().nodes_[id_].grad; }
bool Tensor::requires_grad() const { return graph().nodes_[id_].requires_grad; }

double Tensor::item() const {
    if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
    return value()[0];
}

Tensor Graph::constant(std::vector<double> data, Shape shape) {
    if (numel(shape) != data.size())
        throw std::invalid_argument("constant: shape " + shape_str(shape) + " does not match data size");
    nodes_.push_back(Node{std::move(shape), std::move(data), {}, false, nullptr, {}});
    return {this, nodes_.size() - 1};
}

Tensor Graph::variable(std::vector<double> data, Shape shape) {
    if (numel(shape) != data.size())
        throw std::invalid_argument("variable: shape " + shape_str(shape) + " does not match data size");
    nodes_.push_back(Node{std::move(shape), std::move(data), {}, true, nullptr, {}});
    return {this, nodes_.size() - 1};
}

Tensor Graph::parameter(Param& p, bool trainable) {
    if (!trainable) return constant(p.value, p.shape);
    nodes_.push_back(Node{p.shape, p.value, {}, true, &p, {}});
    return {this, nodes_.size() - 1};
}

Tensor Graph::record(Shape shape, std::vector<double> value, std::initializer_list<Tensor> parents, BackwardFn fn) {
    bool rg = false;
    for (const auto& p : parents) {
        if (p.graph_ != this) throw std::invalid_argument("operands belong to different graphs");
        rg = rg || nodes_[p.id_].requires_grad;
    }
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, rg, nullptr, rg ? std::move(fn) : BackwardFn{}});
    return {this, nodes_.size() - 1};
}

Tensor Graph::record(Shape shape, std::vector<double> value, const std::vector<Tensor>& parents, BackwardFn fn) {
    bool rg = false;
    for (const auto& p : parents) {
        if (p.graph_ != this) throw std::invalid_argument("operands belong to different graphs");
        rg = rg || nodes_[p.id_].requires_grad;
    }
    nodes_.push_back(Node{std::move(shape), std::move(value), {}, rg, nullptr, rg ? std::move(fn) : BackwardFn{}});
    return {this, nodes_.size() - 1};
}

std::span<double> Graph::grad_buffer(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

void Graph::backward(const Tensor& root) {
    if (root.graph_ != this) throw std::invalid_argument("backward: root belongs to another graph");
    if (nodes_[root.id_].value.size() != 1)
        throw std::invalid_argument("backward: root must be scalar, got shape " + shape_str(nodes_[root.id_].shape));
    if (!nodes_[root.id_].requires_grad) return;
    grad_buffer(root.id_)[0] += 1.0;
    for (std::size_t i = root.id_ + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (n.backward) n.backward(n.grad);
        if (n.param != nullptr) {
            for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

void check_same_graph(const Tensor& a, const Tensor& b) {
    if (&a.graph() != &b.graph()) throw std::invalid_argument("operands belong to different graphs");
}

// Result shape of a binary elementwise op with scalar broadcasting.
Shape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
    check_same_graph(a, b);
    if (a.shape() == b.shape() || a.size() == b.size()) return a.size() >= b.size() ? a.shape() : b.shape();
    if (b.size() == 1) return a.shape();
    if (a.size() == 1) return b.shape();
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

template <class F, class Da, class Db>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, Da da, Db db) {
    Shape shape = broadcast_shape(a, b, name);
    const std::size_t n = numel(shape);
    const bool sa = a.size() == 1 && n != 1, sb = b.size() == 1 && n != 1;
    auto av = a.value();
    auto bv = b.value();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[sa ? 0 : i], bv[sb ? 0 : i]);
    Graph& g = a.graph();
    return g.record(std::move(shape), std::move(out), {a, b}, [&g, a, b, sa, sb, da, db](std::span<const double> go) {
        auto av = a.value();
        auto bv = b.value();
        if (g.requires_grad(a.id())) {
            auto ga = g.grad_buffer(a.id());
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[sa ? 0 : i] += go[i] * da(av[sa ? 0 : i], bv[sb ? 0 : i]);
        }
        if (g.requires_grad(b.id())) {
            auto gb = g.grad_buffer(b.id());
            for (std::size_t i = 0; i < go.size(); ++i)
                gb[sb ? 0 : i] += go[i] * db(av[sa ? 0 : i], bv[sb ? 0 : i]);
        }
    });
}

template <class F, class D>
Tensor unary(const Tensor& a, F f, D d) {
    auto av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    Graph& g = a.graph();
    Shape shape = a.shape();
    return g.record(std::move(shape), std::move(out), {a}, [&g, a, d](std::span<const double> go) {
        auto av = a.value();
        auto ga = g.grad_buffer(a.id());
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * d(av[i]);
    });
}

double floored_denominator(double d) {
    if (std::abs(d) >= kEps) return d;
    return d < 0.0 ? -kEps : kEps;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / floored_denominator(y); },
        [](double, double y) { return 1.0 / floored_denominator(y); },
        [](double x, double y) {
            if (std::abs(y) < kEps) return 0.0;
            return -x / (y * y);
        });
}

Tensor neg(const Tensor& a) {
    return unary(a, [](double x) { return -x; }, [](double) { return -1.0; });
}

Tensor scale(const Tensor& a, double c) {
    return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Tensor abs(const Tensor& a) {
    return unary(
        a, [](double x) { return std::abs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sqrt(const Tensor& a) {
    return unary(
        a, [](double x) { return std::sqrt(std::max(x, kEps)); },
        [](double x) { return x < kEps ? 0.0 : 0.5 / std::sqrt(x); });
}

Tensor log(const Tensor& a) {
    return unary(
        a, [](double x) { return std::log(std::max(x, kEps)); }, [](double x) { return x < kEps ? 0.0 : 1.0 / x; });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

namespace {
double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& a) {
    return unary(
        a, [](double x) { return logistic(x); },
        [](double x) {
            const double s = logistic(x);
            return s * (1.0 - s);
        });
}

Tensor sin(const Tensor& a) {
    return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
    return unary(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; }, [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

// ---------------------------------------------------------------------------
// Reductions and reshaping

Tensor sum(const Tensor& a) {
    auto av = a.value();
    const double s = std::accumulate(av.begin(), av.end(), 0.0);
    Graph& g = a.graph();
    return g.record({1}, {s}, {a}, [&g, a](std::span<const double> go) {
        auto ga = g.grad_buffer(a.id());
        for (auto& v : ga) v += go[0];
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    auto av = a.value();
    const double s = std::accumulate(av.begin(), av.end(), 0.0) * inv;
    Graph& g = a.graph();
    return g.record({1}, {s}, {a}, [&g, a, inv](std::span<const double> go) {
        auto ga = g.grad_buffer(a.id());
        for (auto& v : ga) v += go[0] * inv;
    });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    check_same_graph(a, b);
    if (a.size() != b.size())
        throw std::invalid_argument("dot: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto av = a.value();
    auto bv = b.value();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    Graph& g = a.graph();
    return g.record({1}, {s}, {a, b}, [&g, a, b](std::span<const double> go) {
        if (g.requires_grad(a.id())) {
            auto ga = g.grad_buffer(a.id());
            auto bv = b.value();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[0] * bv[i];
        }
        if (g.requires_grad(b.id())) {
            auto gb = g.grad_buffer(b.id());
            auto av = a.value();
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[0] * av[i];
        }
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw std::invalid_argument("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    auto av = a.value();
    Graph& g = a.graph();
    return g.record(std::move(shape), {av.begin(), av.end()}, {a}, [&g, a](std::span<const double> go) {
        auto ga = g.grad_buffer(a.id());
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
}

Tensor concat(const Tensor& a, const Tensor& b) {
    check_same_graph(a, b);
    auto av = a.value();
    auto bv = b.value();
    std::vector<double> out;
    out.reserve(av.size() + bv.size());
    out.insert(out.end(), av.begin(), av.end());
    out.insert(out.end(), bv.begin(), bv.end());
    const std::size_t na = av.size();
    Graph& g = a.graph();
    return g.record({out.size()}, std::move(out), {a, b}, [&g, a, b, na](std::span<const double> go) {
        if (g.requires_grad(a.id())) {
            auto ga = g.grad_buffer(a.id());
            for (std::size_t i = 0; i < na; ++i) ga[i] += go[i];
        }
        if (g.requires_grad(b.id())) {
            auto gb = g.grad_buffer(b.id());
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[na + i];
        }
    });
}

Tensor slice(const Tensor& a, std::size_t offset, std::size_t length) {
    if (offset + length > a.size())
        throw std::invalid_argument("slice out of range for shape " + shape_str(a.shape()));
    auto av = a.value().subspan(offset, length);
    Graph& g = a.graph();
    return g.record({length}, {av.begin(), av.end()}, {a}, [&g, a, offset](std::span<const double> go) {
        auto ga = g.grad_buffer(a.id());
        for (std::size_t i = 0; i < go.size(); ++i) ga[offset + i] += go[i];
    });
}

Tensor detach(const Tensor& a) {
    auto av = a.value();
    return a.graph().constant({av.begin(), av.end()}, a.shape());
}

// ---------------------------------------------------------------------------
// Layers

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_same_graph(x, w);
    if (w.shape().size() != 2 || w.shape()[1] != x.size())
        throw std::invalid_argument("affine: weight " + shape_str(w.shape()) + " incompatible with input " +
                                    shape_str(x.shape()));
    const std::size_t in = w.shape()[1], out = w.shape()[0];
    const bool has_b = b.valid();
    if (has_b && b.size() != out) throw std::invalid_argument("affine: bias size mismatch");
    std::vector<double> y(out);
    kernels::affine_forward(in, out, x.value(), w.value(), has_b ? b.value() : std::span<const double>{}, y);
    Graph& g = x.graph();
    std::vector<Tensor> parents{x, w};
    if (has_b) parents.push_back(b);
    return g.record({out}, std::move(y), parents, [&g, x, w, b, has_b, in, out](std::span<const double> go) {
        auto xv = x.value();
        auto wv = w.value();
        if (g.requires_grad(x.id())) {
            auto gx = g.grad_buffer(x.id());
            for (std::size_t o = 0; o < out; ++o) {
                const double c = go[o];
                const double* row = wv.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) gx[i] += c * row[i];
            }
        }
        if (g.requires_grad(w.id())) {
            auto gw = g.grad_buffer(w.id());
            for (std::size_t o = 0; o < out; ++o) {
                const double c = go[o];
                double* row = gw.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) row[i] += c * xv[i];
            }
        }
        if (has_b && g.requires_grad(b.id())) {
            auto gb = g.grad_buffer(b.id());
            for (std::size_t o = 0; o < out; ++o) gb[o] += go[o];
        }
    });
}

Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_same_graph(x, w);
    if (x.shape().size() != 2 || w.shape().size() != 3 || w.shape()[1] != x.shape()[0])
        throw std::invalid_argument("causal_conv1d: input " + shape_str(x.shape()) + " incompatible with weight " +
                                    shape_str(w.shape()));
    const kernels::ConvShape cs{x.shape()[0], w.shape()[0], w.shape()[2], x.shape()[1]};
    const bool has_b = b.valid();
    if (has_b && b.size() != cs.out_ch) throw std::invalid_argument("causal_conv1d: bias size mismatch");
    std::vector<double> y(cs.out_ch * cs.len);
    kernels::conv1d_forward(cs, x.value(), w.value(), has_b ? b.value() : std::span<const double>{}, y);
    Graph& g = x.graph();
    std::vector<Tensor> parents{x, w};
    if (has_b) parents.push_back(b);
    return g.record({cs.out_ch, cs.len}, std::move(y), parents, [&g, x, w, b, has_b, cs](std::span<const double> go) {
        if (g.requires_grad(x.id())) kernels::conv1d_backward_input(cs, go, w.value(), g.grad_buffer(x.id()));
        const bool need_w = g.requires_grad(w.id());
        const bool need_b = has_b && g.requires_grad(b.id());
        if (need_w) {
            kernels::conv1d_backward_params(cs, go, x.value(), g.grad_buffer(w.id()),
                                            need_b ? g.grad_buffer(b.id()) : std::span<double>{});
        } else if (need_b) {
            auto gb = g.grad_buffer(b.id());
            for (std::size_t o = 0; o < cs.out_ch; ++o)
                for (std::size_t t = 0; t < cs.len; ++t) gb[o] += go[o * cs.len + t];
        }
    });
}

Tensor avg_upsample2x(const Tensor& x) {
    if (x.shape().size() != 2) throw std::invalid_argument("avg_upsample2x expects [C, T], got " + shape_str(x.shape()));
    const std::size_t c = x.shape()[0], t = x.shape()[1];
    auto xv = x.value();
    std::vector<double> y(c * 2 * t);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* in = xv.data() + ch * t;
        double* out = y.data() + ch * 2 * t;
        for (std::size_t i = 0; i < t; ++i) {
            const double prev = i > 0 ? in[i - 1] : 0.0;
            out[2 * i] = 0.5 * (in[i] + prev);
            out[2 * i + 1] = in[i];
        }
    }
    Graph& g = x.graph();
    return g.record({c, 2 * t}, std::move(y), {x}, [&g, x, c, t](std::span<const double> go) {
        auto gx = g.grad_buffer(x.id());
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* gin = go.data() + ch * 2 * t;
            double* gout = gx.data() + ch * t;
            for (std::size_t i = 0; i < t; ++i) {
                gout[i] += 0.5 * gin[2 * i] + gin[2 * i + 1];
                if (i + 1 < t) gout[i] += 0.5 * gin[2 * i + 2];
            }
        }
    });
}

Tensor avg_downsample2x(const Tensor& x) {
    if (x.shape().size() != 2 || x.shape()[1] % 2 != 0)
        throw std::invalid_argument("avg_downsample2x expects [C, even T], got " + shape_str(x.shape()));
    const std::size_t c = x.shape()[0], t = x.shape()[1] / 2;
    auto xv = x.value();
    std::vector<double> y(c * t);
    for (std::size_t i = 0; i < c * t; ++i) y[i] = 0.5 * (xv[2 * i] + xv[2 * i + 1]);
    Graph& g = x.graph();
    return g.record({c, t}, std::move(y), {x}, [&g, x](std::span<const double> go) {
        auto gx = g.grad_buffer(x.id());
        for (std::size_t i = 0; i < go.size(); ++i) {
            gx[2 * i] += 0.5 * go[i];
            gx[2 * i + 1] += 0.5 * go[i];
        }
    });
}

Tensor real_dft_power(const Tensor& x) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("real_dft_power needs at least 2 samples");
    auto spec = dsp::dft(x.value());
    const std::size_t nb = n / 2 + 1;
    std::vector<double> p(nb);
    for (std::size_t k = 0; k < nb; ++k) p[k] = std::norm(spec[k]);
    Graph& g = x.graph();
    return g.record({nb}, std::move(p), {x}, [&g, x, spec = std::move(spec), n, nb](std::span<const double> go) {
        // d|X_k|^2/dx_t = 2 Re(X_k e^{+i 2pi k t / N}); summed over k this is the
        // unnormalized inverse transform of 2 g_k X_k on the non-negative bins.
        std::vector<cplx> y(n, cplx{0.0, 0.0});
        for (std::size_t k = 0; k < nb; ++k) y[k] = 2.0 * go[k] * spec[k];
        dsp::transform(y, true);
        auto gx = g.grad_buffer(x.id());
        for (std::size_t t = 0; t < n; ++t) gx[t] += y[t].real();
    });
}

Tensor mul_rows(const Tensor& x, const Tensor& s) {
    check_same_graph(x, s);
    if (x.shape().size() != 2 || s.size() != x.shape()[0])
        throw std::invalid_argument("mul_rows: " + shape_str(x.shape()) + " by " + shape_str(s.shape()));
    const std::size_t c = x.shape()[0], t = x.shape()[1];
    auto xv = x.value();
    auto sv = s.value();
    std::vector<double> y(c * t);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < t; ++i) y[ch * t + i] = xv[ch * t + i] * sv[ch];
    Graph& g = x.graph();
    return g.record({c, t}, std::move(y), {x, s}, [&g, x, s, c, t](std::span<const double> go) {
        if (g.requires_grad(x.id())) {
            auto gx = g.grad_buffer(x.id());
            auto sv = s.value();
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < t; ++i) gx[ch * t + i] += go[ch * t + i] * sv[ch];
        }
        if (g.requires_grad(s.id())) {
            auto gs = g.grad_buffer(s.id());
            auto xv = x.value();
            for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t i = 0; i < t; ++i) acc += go[ch * t + i] * xv[ch * t + i];
                gs[ch] += acc;
            }
        }
    });
}

Tensor add_rows(const Tensor& x, const Tensor& b) {
    check_same_graph(x, b);
    if (x.shape().size() != 2 || b.size() != x.shape()[0])
        throw std::invalid_argument("add_rows: " + shape_str(x.shape()) + " plus " + shape_str(b.shape()));
    const std::size_t c = x.shape()[0], t = x.shape()[1];
    auto xv = x.value();
    auto bv = b.value();
    std::vector<double> y(c * t);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < t; ++i) y[ch * t + i] = xv[ch * t + i] + bv[ch];
    Graph& g = x.graph();
    return g.record({c, t}, std::move(y), {x, b}, [&g, x, b, c, t](std::span<const double> go) {
        if (g.requires_grad(x.id())) {
            auto gx = g.grad_buffer(x.id());
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        }
        if (g.requires_grad(b.id())) {
            auto gb = g.grad_buffer(b.id());
            for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t i = 0; i < t; ++i) acc += go[ch * t + i];
                gb[ch] += acc;
            }
        }
    });
}

Tensor outer(const Tensor& u, const Tensor& v) {
    check_same_graph(u, v);
    const std::size_t c = u.size(), t = v.size();
    auto uv = u.value();
    auto vv = v.value();
    std::vector<double> y(c * t);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < t; ++i) y[ch * t + i] = uv[ch] * vv[i];
    Graph& g = u.graph();
    return g.record({c, t}, std::move(y), {u, v}, [&g, u, v, c, t](std::span<const double> go) {
        auto uv = u.value();
        auto vv = v.value();
        if (g.requires_grad(u.id())) {
            auto gu = g.grad_buffer(u.id());
            for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t i = 0; i < t; ++i) acc += go[ch * t + i] * vv[i];
                gu[ch] += acc;
            }
        }
        if (g.requires_grad(v.id())) {
            auto gv = g.grad_buffer(v.id());
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < t; ++i) gv[i] += go[ch * t + i] * uv[ch];
        }
    });
}

Tensor mean_time(const Tensor& x) {
    if (x.shape().size() != 2) throw std::invalid_argument("mean_time expects [C, T], got " + shape_str(x.shape()));
    const std::size_t c = x.shape()[0], t = x.shape()[1];
    const double inv = 1.0 / static_cast<double>(t);
    auto xv = x.value();
    std::vector<double> y(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < t; ++i) acc += xv[ch * t + i];
        y[ch] = acc * inv;
    }
    Graph& g = x.graph();
    return g.record({c}, std::move(y), {x}, [&g, x, c, t, inv](std::span<const double> go) {
        auto gx = g.grad_buffer(x.id());
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < t; ++i) gx[ch * t + i] += go[ch] * inv;
    });
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<Tensor(Tensor)>& f, const std::vector<double>& x, const Shape& shape, double h) {
    if (h <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
    std::vector<double> analytic;
    {
        Graph g;
        Tensor v = g.variable(x, shape);
        Tensor y = f(v);
        g.backward(y);
        auto gr = v.grad();
        analytic.assign(x.size(), 0.0);
        std::copy(gr.begin(), gr.end(), analytic.begin());
    }
    auto eval = [&](const std::vector<double>& p) {
        Graph g;
        return f(g.constant(p, shape)).item();
    };
    double worst = 0.0;
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = eval(probe);
        probe[i] = x[i] - h;
        const double fm = eval(probe);
        probe[i] = x[i];
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace swg::ad
