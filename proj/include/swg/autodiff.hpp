#pragma once

// Tape-based reverse-mode differentiation over dense row-major tensors.
//
// A Graph owns every node created during a forward pass. Nodes are appended in
// creation order, so walking the tape backwards is a reverse topological order.
// Tensor is a cheap handle (graph pointer + node index) and is only valid while
// its Graph is alive. Broadcasting is limited to scalar-tensor pairs.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace swg::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

/// Floor applied to denominators and to the arguments of log/sqrt.
inline constexpr double kEps = 1e-12;

/// Learnable tensor living outside any graph. Gradients from Graph::backward
/// are accumulated into `grad`.
struct Param {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;

    Param() = default;
    Param(std::string n, Shape s, std::vector<double> v);
    std::size_t size() const noexcept { return value.size(); }
    void zero_grad();
};

class Graph;

class Tensor {
public:
    Tensor() = default;

    bool valid() const noexcept { return graph_ != nullptr; }
    Graph& graph() const;
    std::size_t id() const noexcept { return id_; }

    const Shape& shape() const;
    std::size_t size() const;
    std::span<const double> value() const;
    /// Empty until backward has reached this node.
    std::span<const double> grad() const;
    double item() const;
    bool requires_grad() const;

private:
    friend class Graph;
    Tensor(Graph* g, std::size_t id) : graph_(g), id_(id) {}
    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

class Graph {
public:
    /// Receives the gradient of the root w.r.t. this node's output.
    using BackwardFn = std::function<void(std::span<const double>)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Tensor constant(std::vector<double> data, Shape shape);
    Tensor variable(std::vector<double> data, Shape shape);
    Tensor scalar(double v) { return constant({v}, {1}); }
    /// Leaf bound to `p`; backward adds into p.grad. With trainable = false the
    /// value is copied in as a constant and nothing flows back.
    Tensor parameter(Param& p, bool trainable = true);

    /// Root must hold exactly one element.
    void backward(const Tensor& root);

    /// Appends a node. requires_grad is inherited from the parents; when none
    /// requires it the backward rule is dropped.
    Tensor record(Shape shape, std::vector<double> value, std::initializer_list<Tensor> parents, BackwardFn fn);
    Tensor record(Shape shape, std::vector<double> value, const std::vector<Tensor>& parents, BackwardFn fn);

    /// Gradient buffer of a node, allocated on first use. Backward rules write here.
    std::span<double> grad_buffer(std::size_t id);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    friend class Tensor;
    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        Param* param = nullptr;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

// Elementwise; operands share a shape or one of them has a single element.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// Denominators with |d| < kEps are replaced by ±kEps (zero derivative there).
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
/// sqrt(max(x, kEps))
Tensor sqrt(const Tensor& a);
/// log(max(x, kEps))
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const Tensor& a, const Tensor& b);
Tensor slice(const Tensor& a, std::size_t offset, std::size_t length);
Tensor detach(const Tensor& a);

/// x [in], w [out, in], b [out] (or invalid for no bias) -> [out]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

/// x [in_ch, len], w [out_ch, in_ch, taps], b [out_ch] or invalid -> [out_ch, len].
/// Output at t only sees inputs at t' <= t.
Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

/// [C, T] -> [C, 2T]: repeat each sample, then 2-tap causal mean.
Tensor avg_upsample2x(const Tensor& x);
/// [C, T] -> [C, T/2]: mean of adjacent pairs. T must be even.
Tensor avg_downsample2x(const Tensor& x);

/// [N] -> [N/2 + 1], |X_k|^2 of the unnormalized DFT.
Tensor real_dft_power(const Tensor& x);

/// x [C, T] scaled per row by s [C].
Tensor mul_rows(const Tensor& x, const Tensor& s);
/// x [C, T] plus b [C] broadcast along time.
Tensor add_rows(const Tensor& x, const Tensor& b);
/// u [C], v [T] -> [C, T]
Tensor outer(const Tensor& u, const Tensor& v);
/// [C, T] -> [C]
Tensor mean_time(const Tensor& x);

/// Max over coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
/// with central differences of step h. `f` must return a scalar.
double grad_check(const std::function<Tensor(Tensor)>& f, const std::vector<double>& x, const Shape& shape,
                  double h = 1e-5);

}  // namespace swg::ad
