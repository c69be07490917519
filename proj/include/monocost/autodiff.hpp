#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "monocost/tensor.hpp"

namespace monocost {

// Reverse-mode tape node. Graphs are built define-by-run per batch and torn
// down when the last handle goes out of scope; leaf parameters persist across
// steps and keep their accumulated gradients until the optimizer zeroes them.
struct NodeImpl {
    Tensor value;
    Tensor grad;  // allocated on first use, same shape as value
    bool requires_grad = false;
    bool is_leaf = false;
    std::string name;  // parameters only
    std::vector<std::shared_ptr<NodeImpl>> parents;
    std::function<void(NodeImpl&)> backprop;  // accumulates self.grad into parents

    Tensor& ensure_grad() {
        if (grad.size() == 0) grad = Tensor(value.rows(), value.cols());
        return grad;
    }
};

class Node {
public:
    Node() = default;
    explicit Node(std::shared_ptr<NodeImpl> impl) : impl_(std::move(impl)) {}

    static Node constant(Tensor v);
    static Node scalar(double v) { return constant(Tensor::scalar(v)); }
    static Node param(Tensor v, std::string name);

    bool empty() const { return impl_ == nullptr; }
    const Tensor& value() const { return impl_->value; }
    Tensor& grad() const { return impl_->ensure_grad(); }
    bool requires_grad() const { return impl_->requires_grad; }
    const std::string& name() const { return impl_->name; }
    int rows() const { return impl_->value.rows(); }
    int cols() const { return impl_->value.cols(); }

    void zero_grad() const { impl_->ensure_grad().fill(0.0); }

    NodeImpl* get() const { return impl_.get(); }
    const std::shared_ptr<NodeImpl>& ptr() const { return impl_; }

private:
    std::shared_ptr<NodeImpl> impl_;
};

// Matrix ops
Node matmul(const Node& a, const Node& b);
Node transpose(const Node& a);

// Elementwise binary ops with row/col/scalar broadcast on either side
Node add(const Node& a, const Node& b);
Node sub(const Node& a, const Node& b);
Node mul(const Node& a, const Node& b);
Node div(const Node& a, const Node& b);
Node max(const Node& a, const Node& b);  // ties route gradient to a
Node min(const Node& a, const Node& b);

// Elementwise unary ops
Node neg(const Node& x);
Node tanh(const Node& x);
Node exp(const Node& x);
Node log(const Node& x);
Node sqrt(const Node& x);
Node sigmoid(const Node& x);
Node softplus(const Node& x);
Node relu(const Node& x);  // positive part
Node square(const Node& x);
Node scale(const Node& x, double k);
Node shift(const Node& x, double k);
Node clamp(const Node& x, double lo, double hi);  // pass-through gradient inside [lo, hi]

// Custom scalar map: y = f(x), local gradient df(x, y)
Node unary_map(const Node& x, double (*f)(double), double (*df)(double x, double y));

// Reductions. axis 0 collapses rows (result 1xC), axis 1 collapses columns
// (result Rx1). The *_all forms collapse to 1x1.
Node sum_all(const Node& x);
Node mean_all(const Node& x);
Node sum(const Node& x, int axis);
Node mean(const Node& x, int axis);
Node logsumexp(const Node& x, int axis);  // max-shifted
Node logsumexp_all(const Node& x);

// Grouped row reductions: input (K*G)xC, output KxC where output row k
// reduces input rows [k*G, (k+1)*G). Pairs with tile_rows.
Node group_sum_rows(const Node& x, int group);
Node group_mean_rows(const Node& x, int group);
Node group_logsumexp_rows(const Node& x, int group);

// Structure ops
Node tile_rows(const Node& x, int times);  // each row repeated `times` consecutive times
Node concat_cols(const std::vector<Node>& xs);
Node slice_cols(const Node& x, int first, int count);

// Convenience
Node affine(const Node& x, const Node& w, const Node& b);  // x*w + b (b is 1xN)

inline Node operator+(const Node& a, const Node& b) { return add(a, b); }
inline Node operator-(const Node& a, const Node& b) { return sub(a, b); }
inline Node operator*(const Node& a, const Node& b) { return mul(a, b); }
inline Node operator/(const Node& a, const Node& b) { return div(a, b); }
inline Node operator-(const Node& a) { return neg(a); }

// Reverse sweep from a 1x1 root. Gradients accumulate; callers zero leaf
// grads between steps (the optimizer does this automatically).
void backward(const Node& root);

}  // namespace monocost
