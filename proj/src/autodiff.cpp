#include "monocost/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace monocost {

namespace {

Node make_node(Tensor value, std::vector<Node> parents, std::function<void(NodeImpl&)> backprop) {
    auto impl = std::make_shared<NodeImpl>();
    impl->value = std::move(value);
    bool rg = false;
    for (const Node& p : parents) rg = rg || p.get()->requires_grad;
    impl->requires_grad = rg;
    if (rg) {
        impl->parents.reserve(parents.size());
        for (const Node& p : parents) impl->parents.push_back(p.ptr());
        impl->backprop = std::move(backprop);
    }
    return Node(impl);
}

// Broadcast-aware read: operand may be full-shape, 1x1, a 1xC row, or an Rx1
// column relative to the result shape.
inline double bread(const Tensor& t, int i, int j) {
    return t.at(t.rows() == 1 ? 0 : i, t.cols() == 1 ? 0 : j);
}

inline void baccum(Tensor& g, int i, int j, double v) {
    g.at(g.rows() == 1 ? 0 : i, g.cols() == 1 ? 0 : j) += v;
}

void check_broadcast(const Tensor& a, const Tensor& b, int& rows, int& cols, const char* op) {
    rows = std::max(a.rows(), b.rows());
    cols = std::max(a.cols(), b.cols());
    auto ok = [&](const Tensor& t) {
        return (t.rows() == rows || t.rows() == 1) && (t.cols() == cols || t.cols() == 1);
    };
    if (!ok(a) || !ok(b))
        throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() + " vs " +
                                    b.shape_str());
}

template <typename Fwd, typename Back>
Node binary_ew(const Node& a, const Node& b, const char* opname, Fwd fwd, Back back) {
    int rows, cols;
    check_broadcast(a.value(), b.value(), rows, cols, opname);
    Tensor out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out.at(i, j) = fwd(bread(a.value(), i, j), bread(b.value(), i, j));
    return make_node(std::move(out), {a, b}, [back](NodeImpl& self) {
        NodeImpl& pa = *self.parents[0];
        NodeImpl& pb = *self.parents[1];
        Tensor* ga = pa.requires_grad ? &pa.ensure_grad() : nullptr;
        Tensor* gb = pb.requires_grad ? &pb.ensure_grad() : nullptr;
        for (int i = 0; i < self.value.rows(); ++i)
            for (int j = 0; j < self.value.cols(); ++j) {
                const double av = bread(pa.value, i, j);
                const double bv = bread(pb.value, i, j);
                const double g = self.grad.at(i, j);
                double da, db;
                back(av, bv, self.value.at(i, j), da, db);
                if (ga) baccum(*ga, i, j, g * da);
                if (gb) baccum(*gb, i, j, g * db);
            }
    });
}

template <typename Fwd, typename Back>
Node unary_ew(const Node& x, Fwd fwd, Back back) {
    Tensor out(x.rows(), x.cols());
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = fwd(v[i]);
    return make_node(std::move(out), {x}, [back](NodeImpl& self) {
        NodeImpl& p = *self.parents[0];
        Tensor& g = p.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i)
            g[i] += self.grad[i] * back(p.value[i], self.value[i]);
    });
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Node Node::constant(Tensor v) {
    auto impl = std::make_shared<NodeImpl>();
    impl->value = std::move(v);
    impl->is_leaf = true;
    return Node(impl);
}

Node Node::param(Tensor v, std::string name) {
    auto impl = std::make_shared<NodeImpl>();
    impl->value = std::move(v);
    impl->requires_grad = true;
    impl->is_leaf = true;
    impl->name = std::move(name);
    return Node(impl);
}

Node matmul(const Node& a, const Node& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows())
        throw std::invalid_argument("matmul: inner extents differ, " + av.shape_str() + " * " + bv.shape_str());
    const int m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out(m, n);
    for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
            const double ail = av.at(i, l);
            if (ail == 0.0) continue;
            for (int j = 0; j < n; ++j) out.at(i, j) += ail * bv.at(l, j);
        }
    return make_node(std::move(out), {a, b}, [m, k, n](NodeImpl& self) {
        NodeImpl& pa = *self.parents[0];
        NodeImpl& pb = *self.parents[1];
        if (pa.requires_grad) {  // dA += G * B^T
            Tensor& ga = pa.ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double g = self.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (int l = 0; l < k; ++l) ga.at(i, l) += g * pb.value.at(l, j);
                }
        }
        if (pb.requires_grad) {  // dB += A^T * G
            Tensor& gb = pb.ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int l = 0; l < k; ++l) {
                    const double ail = pa.value.at(i, l);
                    if (ail == 0.0) continue;
                    for (int j = 0; j < n; ++j) gb.at(l, j) += ail * self.grad.at(i, j);
                }
        }
    });
}

Node transpose(const Node& a) {
    const Tensor& v = a.value();
    Tensor out(v.cols(), v.rows());
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) out.at(j, i) = v.at(i, j);
    return make_node(std::move(out), {a}, [](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (int i = 0; i < self.value.rows(); ++i)
            for (int j = 0; j < self.value.cols(); ++j) g.at(j, i) += self.grad.at(i, j);
    });
}

Node add(const Node& a, const Node& b) {
    return binary_ew(a, b, "add", [](double x, double y) { return x + y; },
                     [](double, double, double, double& da, double& db) { da = 1.0, db = 1.0; });
}

Node sub(const Node& a, const Node& b) {
    return binary_ew(a, b, "sub", [](double x, double y) { return x - y; },
                     [](double, double, double, double& da, double& db) { da = 1.0, db = -1.0; });
}

Node mul(const Node& a, const Node& b) {
    return binary_ew(a, b, "mul", [](double x, double y) { return x * y; },
                     [](double x, double y, double, double& da, double& db) { da = y, db = x; });
}

Node div(const Node& a, const Node& b) {
    for (double y : b.value().data())
        if (y == 0.0) throw std::domain_error("div: zero divisor");
    return binary_ew(a, b, "div", [](double x, double y) { return x / y; },
                     [](double x, double y, double, double& da, double& db) {
                         da = 1.0 / y;
                         db = -x / (y * y);
                     });
}

Node max(const Node& a, const Node& b) {
    return binary_ew(a, b, "max", [](double x, double y) { return x >= y ? x : y; },
                     [](double x, double y, double, double& da, double& db) {
                         da = x >= y ? 1.0 : 0.0;
                         db = 1.0 - da;
                     });
}

Node min(const Node& a, const Node& b) {
    return binary_ew(a, b, "min", [](double x, double y) { return x <= y ? x : y; },
                     [](double x, double y, double, double& da, double& db) {
                         da = x <= y ? 1.0 : 0.0;
                         db = 1.0 - da;
                     });
}

Node neg(const Node& x) {
    return unary_ew(x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Node tanh(const Node& x) {
    return unary_ew(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Node exp(const Node& x) {
    Node y = unary_ew(x, [](double v) { return std::exp(v); }, [](double, double yv) { return yv; });
    if (!y.value().all_finite()) throw std::domain_error("exp: overflow to non-finite value");
    return y;
}

Node log(const Node& x) {
    for (double v : x.value().data())
        if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
    return unary_ew(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Node sqrt(const Node& x) {
    for (double v : x.value().data())
        if (!(v > 0.0)) throw std::domain_error("sqrt: input must be strictly positive");
    return unary_ew(x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Node sigmoid(const Node& x) {
    return unary_ew(x, [](double v) { return stable_sigmoid(v); },
                    [](double, double y) { return y * (1.0 - y); });
}

Node softplus(const Node& x) {
    return unary_ew(x, [](double v) { return stable_softplus(v); },
                    [](double v, double) { return stable_sigmoid(v); });
}

Node relu(const Node& x) {
    return unary_ew(x, [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Node square(const Node& x) {
    return unary_ew(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Node scale(const Node& x, double k) {
    return unary_ew(x, [k](double v) { return k * v; }, [k](double, double) { return k; });
}

Node shift(const Node& x, double k) {
    return unary_ew(x, [k](double v) { return v + k; }, [](double, double) { return 1.0; });
}

Node clamp(const Node& x, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
    return unary_ew(x, [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
                    [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Node unary_map(const Node& x, double (*f)(double), double (*df)(double, double)) {
    return unary_ew(x, f, df);
}

Node sum_all(const Node& x) {
    if (x.value().size() == 0) throw std::domain_error("sum_all: empty reduction");
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return make_node(Tensor::scalar(s), {x}, [](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        const double gv = self.grad[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

Node mean_all(const Node& x) {
    if (x.value().size() == 0) throw std::domain_error("mean_all: empty reduction");
    return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size()));
}

Node sum(const Node& x, int axis) {
    const Tensor& v = x.value();
    if (v.size() == 0) throw std::domain_error("sum: empty reduction");
    if (axis != 0 && axis != 1) throw std::invalid_argument("sum: axis must be 0 or 1");
    Tensor out = axis == 0 ? Tensor(1, v.cols()) : Tensor(v.rows(), 1);
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) out.at(axis == 0 ? 0 : i, axis == 0 ? j : 0) += v.at(i, j);
    return make_node(std::move(out), {x}, [axis](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) g.at(i, j) += self.grad.at(axis == 0 ? 0 : i, axis == 0 ? j : 0);
    });
}

Node mean(const Node& x, int axis) {
    const double n = axis == 0 ? x.rows() : x.cols();
    return scale(sum(x, axis), 1.0 / n);
}

namespace {

// logsumexp over index sets; used by the axis, all, and grouped variants.
// For each output element we record the shifted softmax weights implicitly by
// recomputing exp(x - y) in the backward pass.
Node lse_generic(const Node& x, int out_rows, int out_cols,
                 std::function<std::pair<int, int>(int i, int j)> to_out) {
    const Tensor& v = x.value();
    if (v.size() == 0) throw std::domain_error("logsumexp: empty reduction");
    Tensor mx = Tensor::full(out_rows, out_cols, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) {
            auto [oi, oj] = to_out(i, j);
            mx.at(oi, oj) = std::max(mx.at(oi, oj), v.at(i, j));
        }
    Tensor acc(out_rows, out_cols);
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) {
            auto [oi, oj] = to_out(i, j);
            acc.at(oi, oj) += std::exp(v.at(i, j) - mx.at(oi, oj));
        }
    Tensor out(out_rows, out_cols);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mx[i] + std::log(acc[i]);
    return make_node(std::move(out), {x}, [to_out](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        const Tensor& xv = self.parents[0]->value;
        for (int i = 0; i < xv.rows(); ++i)
            for (int j = 0; j < xv.cols(); ++j) {
                auto [oi, oj] = to_out(i, j);
                g.at(i, j) += self.grad.at(oi, oj) * std::exp(xv.at(i, j) - self.value.at(oi, oj));
            }
    });
}

}  // namespace

Node logsumexp(const Node& x, int axis) {
    if (axis != 0 && axis != 1) throw std::invalid_argument("logsumexp: axis must be 0 or 1");
    if (axis == 0)
        return lse_generic(x, 1, x.cols(), [](int, int j) { return std::pair<int, int>(0, j); });
    return lse_generic(x, x.rows(), 1, [](int i, int) { return std::pair<int, int>(i, 0); });
}

Node logsumexp_all(const Node& x) {
    return lse_generic(x, 1, 1, [](int, int) { return std::pair<int, int>(0, 0); });
}

Node group_sum_rows(const Node& x, int group) {
    const Tensor& v = x.value();
    if (group < 1 || v.rows() % group != 0)
        throw std::invalid_argument("group_sum_rows: row count not divisible by group");
    Tensor out(v.rows() / group, v.cols());
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) out.at(i / group, j) += v.at(i, j);
    return make_node(std::move(out), {x}, [group](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) g.at(i, j) += self.grad.at(i / group, j);
    });
}

Node group_mean_rows(const Node& x, int group) {
    return scale(group_sum_rows(x, group), 1.0 / group);
}

Node group_logsumexp_rows(const Node& x, int group) {
    const Tensor& v = x.value();
    if (group < 1 || v.rows() % group != 0)
        throw std::invalid_argument("group_logsumexp_rows: row count not divisible by group");
    return lse_generic(x, v.rows() / group, v.cols(),
                       [group](int i, int j) { return std::pair<int, int>(i / group, j); });
}

Node tile_rows(const Node& x, int times) {
    if (times < 1) throw std::invalid_argument("tile_rows: times must be >= 1");
    const Tensor& v = x.value();
    Tensor out(v.rows() * times, v.cols());
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out.at(i, j) = v.at(i / times, j);
    return make_node(std::move(out), {x}, [times](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (int i = 0; i < self.value.rows(); ++i)
            for (int j = 0; j < self.value.cols(); ++j) g.at(i / times, j) += self.grad.at(i, j);
    });
}

Node concat_cols(const std::vector<Node>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int rows = xs.front().rows();
    int cols = 0;
    for (const Node& x : xs) {
        if (x.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
        cols += x.cols();
    }
    Tensor out(rows, cols);
    int off = 0;
    for (const Node& x : xs) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < x.cols(); ++j) out.at(i, off + j) = x.value().at(i, j);
        off += x.cols();
    }
    return make_node(std::move(out), xs, [](NodeImpl& self) {
        int off = 0;
        for (auto& p : self.parents) {
            if (p->requires_grad) {
                Tensor& g = p->ensure_grad();
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) g.at(i, j) += self.grad.at(i, off + j);
            }
            off += p->value.cols();
        }
    });
}

Node slice_cols(const Node& x, int first, int count) {
    const Tensor& v = x.value();
    if (first < 0 || count < 1 || first + count > v.cols())
        throw std::invalid_argument("slice_cols: range out of bounds");
    Tensor out(v.rows(), count);
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < count; ++j) out.at(i, j) = v.at(i, first + j);
    return make_node(std::move(out), {x}, [first](NodeImpl& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (int i = 0; i < self.value.rows(); ++i)
            for (int j = 0; j < self.value.cols(); ++j) g.at(i, first + j) += self.grad.at(i, j);
    });
}

Node affine(const Node& x, const Node& w, const Node& b) { return add(matmul(x, w), b); }

void backward(const Node& root) {
    if (root.empty()) throw std::logic_error("backward: empty node");
    if (!root.value().is_scalar()) throw std::logic_error("backward: root must be a 1x1 scalar");
    if (!root.requires_grad()) return;

    // Post-order topological sort, iterative to keep deep chains off the stack.
    std::vector<NodeImpl*> order;
    std::unordered_set<NodeImpl*> visited;
    std::vector<std::pair<NodeImpl*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            NodeImpl* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch for this sweep; only leaves accumulate
    // across repeated calls.
    for (NodeImpl* n : order)
        if (!n->is_leaf) n->ensure_grad().fill(0.0);
    root.get()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeImpl* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

}  // namespace monocost
