#include "monocost/monotone.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost {

void MonotoneNetSpec::validate() const {
    if (x_dim < 0 || r_dim < 1) throw std::invalid_argument("MonotoneNetSpec: bad input dims");
    if (hidden < 0) throw std::invalid_argument("MonotoneNetSpec: hidden must be >= 0");
    if (groups < 1 || units_per_group < 1)
        throw std::invalid_argument("MonotoneNetSpec: groups and units_per_group must be >= 1");
    if (smoothing_beta <= 0.0) throw std::invalid_argument("MonotoneNetSpec: smoothing_beta must be > 0");
}

MonotoneNet::MonotoneNet(MonotoneNetSpec spec, Rng& rng, const std::string& name_prefix)
    : spec_(std::move(spec)) {
    spec_.validate();
    const bool positive = spec_.kind == MonotoneKind::PosNN;
    if (spec_.kind == MonotoneKind::MinMax || spec_.kind == MonotoneKind::SmoothMM) {
        const double bx = spec_.x_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(spec_.x_dim)) : 0.0;
        const double br = 1.0 / std::sqrt(static_cast<double>(spec_.r_dim));
        for (int g = 0; g < spec_.groups; ++g) {
            const std::string gp = name_prefix + ".g" + std::to_string(g);
            mm_wx_.push_back(Node::param(rng.uniform_tensor(spec_.x_dim, spec_.units_per_group, -bx, bx),
                                         gp + ".wx"));
            mm_wr_.push_back(Node::param(rng.uniform_tensor(spec_.r_dim, spec_.units_per_group, -br, br),
                                         gp + ".wr"));
            mm_b_.push_back(Node::param(rng.uniform_tensor(1, spec_.units_per_group, -br, br), gp + ".b"));
        }
        return;
    }
    const int width = spec_.hidden > 0 ? spec_.hidden : 1;
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.x_dim + spec_.r_dim));
    wx0_ = Node::param(rng.uniform_tensor(spec_.x_dim, width, -bound, bound), name_prefix + ".wx0");
    wr0_ = Node::param(rng.uniform_tensor(spec_.r_dim, width, -bound, bound), name_prefix + ".wr0");
    b0_ = Node::param(rng.uniform_tensor(1, width, -bound, bound), name_prefix + ".b0");
    if (spec_.hidden > 0) {
        MlpSpec tail;
        tail.layer_sizes = {spec_.hidden, spec_.hidden, 1};
        tail.positive_weights = {positive, positive};
        tail_ = Mlp(tail, rng, name_prefix + ".tail");
        has_tail_ = true;
    }
}

Node MonotoneNet::units(const Node& x, const Node& r, int group) const {
    Node wr = mm_wr_[group];
    wr = positive_transform(wr);
    Node a = add(matmul(r, wr), mm_b_[group]);
    if (spec_.x_dim > 0) a = add(a, matmul(x, mm_wx_[group]));
    return a;  // B x units_per_group
}

namespace {

Node fold_cols(const Node& a, bool take_max) {
    Node acc = slice_cols(a, 0, 1);
    for (int j = 1; j < a.cols(); ++j) {
        Node cj = slice_cols(a, j, 1);
        acc = take_max ? max(acc, cj) : min(acc, cj);
    }
    return acc;
}

}  // namespace

Node MonotoneNet::forward(const Node& x, const Node& r) const {
    ++forward_calls_;
    if (r.cols() != spec_.r_dim) throw std::invalid_argument("MonotoneNet: r width mismatch");
    if (spec_.x_dim > 0 && x.cols() != spec_.x_dim)
        throw std::invalid_argument("MonotoneNet: x width mismatch");
    if (spec_.kind == MonotoneKind::MinMax) {
        std::vector<Node> group_vals;
        for (int g = 0; g < spec_.groups; ++g) group_vals.push_back(fold_cols(units(x, r, g), true));
        return fold_cols(concat_cols(group_vals), false);
    }
    if (spec_.kind == MonotoneKind::SmoothMM) {
        const double beta = spec_.smoothing_beta;
        std::vector<Node> group_vals;
        for (int g = 0; g < spec_.groups; ++g)
            group_vals.push_back(scale(logsumexp(scale(units(x, r, g), beta), 1), 1.0 / beta));
        Node gv = concat_cols(group_vals);
        return scale(logsumexp(scale(gv, -beta), 1), -1.0 / beta);
    }
    Node wr = spec_.kind == MonotoneKind::PosNN ? positive_transform(wr0_) : wr0_;
    Node a = add(matmul(r, wr), b0_);
    if (spec_.x_dim > 0) a = add(a, matmul(x, wx0_));
    if (!has_tail_) return a;
    return tail_.forward(tanh(a));
}

Tensor MonotoneNet::forward_values(const Tensor& x, const Tensor& r) const {
    ++forward_calls_;
    const int B = r.rows();
    auto unit_values = [&](int g) {
        Tensor wr = positive_transform_values(mm_wr_[g].value());
        const Tensor& wx = mm_wx_[g].value();
        const Tensor& b = mm_b_[g].value();
        Tensor a(B, spec_.units_per_group);
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < spec_.units_per_group; ++j) {
                double s = b.at(0, j);
                for (int k = 0; k < spec_.r_dim; ++k) s += r.at(i, k) * wr.at(k, j);
                for (int k = 0; k < spec_.x_dim; ++k) s += x.at(i, k) * wx.at(k, j);
                a.at(i, j) = s;
            }
        return a;
    };
    if (spec_.kind == MonotoneKind::MinMax || spec_.kind == MonotoneKind::SmoothMM) {
        const bool smooth = spec_.kind == MonotoneKind::SmoothMM;
        const double beta = spec_.smoothing_beta;
        std::vector<Tensor> unit_mats;
        unit_mats.reserve(spec_.groups);
        for (int g = 0; g < spec_.groups; ++g) unit_mats.push_back(unit_values(g));
        Tensor out(B, 1);
        std::vector<double> gv(spec_.groups);
        for (int i = 0; i < B; ++i) {
            for (int g = 0; g < spec_.groups; ++g) {
                const Tensor& a = unit_mats[g];
                double m = a.at(i, 0);
                for (int j = 1; j < spec_.units_per_group; ++j) m = std::max(m, a.at(i, j));
                if (smooth) {
                    double acc = 0.0;
                    for (int j = 0; j < spec_.units_per_group; ++j) acc += std::exp(beta * (a.at(i, j) - m));
                    gv[g] = m + std::log(acc) / beta;
                } else {
                    gv[g] = m;
                }
            }
            double o = gv[0];
            for (int g = 1; g < spec_.groups; ++g) o = std::min(o, gv[g]);
            if (smooth) {
                const double mn = o;
                double acc = 0.0;
                for (int g = 0; g < spec_.groups; ++g) acc += std::exp(-beta * (gv[g] - mn));
                o = mn - std::log(acc) / beta;
            }
            out.at(i, 0) = o;
        }
        return out;
    }
    Tensor wr = spec_.kind == MonotoneKind::PosNN ? positive_transform_values(wr0_.value()) : wr0_.value();
    const Tensor& wx = wx0_.value();
    const Tensor& b = b0_.value();
    const int width = spec_.hidden > 0 ? spec_.hidden : 1;
    Tensor a(B, width);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < width; ++j) {
            double s = b.at(0, j);
            for (int k = 0; k < spec_.r_dim; ++k) s += r.at(i, k) * wr.at(k, j);
            for (int k = 0; k < spec_.x_dim; ++k) s += x.at(i, k) * wx.at(k, j);
            a.at(i, j) = s;
        }
    if (!has_tail_) return a;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::tanh(a[i]);
    return tail_.forward_values(a);
}

Node MonotoneNet::r_gradient(const Node& x, const Node& r) const {
    if (spec_.kind != MonotoneKind::Plain)
        throw std::logic_error("MonotoneNet::r_gradient: only the Plain kind is supported");
    if (!has_tail_) {
        Node ones = Node::constant(Tensor::full(r.rows(), 1, 1.0));
        return matmul(ones, transpose(wr0_));
    }
    Node a = add(matmul(r, wr0_), b0_);
    if (spec_.x_dim > 0) a = add(a, matmul(x, wx0_));
    Node h1 = tanh(a);
    Node d_h1 = tail_.input_gradient(h1);              // B x hidden
    Node d_a = mul(d_h1, shift(neg(square(h1)), 1.0));  // through tanh
    return matmul(d_a, transpose(wr0_));
}

std::vector<Node> MonotoneNet::params() const {
    std::vector<Node> out;
    if (spec_.kind == MonotoneKind::MinMax || spec_.kind == MonotoneKind::SmoothMM) {
        for (int g = 0; g < spec_.groups; ++g) {
            out.push_back(mm_wx_[g]);
            out.push_back(mm_wr_[g]);
            out.push_back(mm_b_[g]);
        }
        return out;
    }
    out = {wx0_, wr0_, b0_};
    if (has_tail_)
        for (const Node& p : tail_.params()) out.push_back(p);
    return out;
}

Node hint_penalty(const MonotoneNet& model, const Tensor& x, const Tensor& r, int pairs, Rng& rng) {
    if (pairs < 1) throw std::invalid_argument("hint_penalty: pairs must be >= 1");
    const int B = r.rows();
    const int dx = x.cols(), m = r.cols();
    Tensor xp(pairs, dx), r1(pairs, m), r2(pairs, m);
    for (int p = 0; p < pairs; ++p) {
        const int b = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(B));
        for (int j = 0; j < dx; ++j) xp.at(p, j) = x.at(b, j);
        for (int j = 0; j < m; ++j) {
            r1.at(p, j) = r.at(b, j);
            r2.at(p, j) = r.at(b, j) + std::abs(rng.normal());
        }
    }
    Node f1 = model.forward(Node::constant(xp), Node::constant(r1));
    Node f2 = model.forward(Node::constant(std::move(xp)), Node::constant(std::move(r2)));
    return mean_all(relu(sub(f1, f2)));
}

Node pwl_penalty(const MonotoneNet& model, const Tensor& x, const Tensor& r, int probes) {
    if (probes < 1) throw std::invalid_argument("pwl_penalty: probes must be >= 1");
    const int n = std::min(probes, r.rows());
    Tensor xp(n, x.cols()), rp(n, r.cols());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < x.cols(); ++j) xp.at(i, j) = x.at(i, j);
        for (int j = 0; j < r.cols(); ++j) rp.at(i, j) = r.at(i, j);
    }
    Node g = model.r_gradient(Node::constant(std::move(xp)), Node::constant(std::move(rp)));
    return mean_all(sum(relu(neg(g)), 1));
}

std::vector<double> squash_revenue(const std::vector<double>& r) {
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = r[i];
        out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return out;
}

std::vector<double> unsquash_revenue(const std::vector<double>& s) {
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0 && s[i] < 1.0)) throw std::domain_error("unsquash_revenue: input outside (0,1)");
        out[i] = std::log(s[i]) - std::log1p(-s[i]);
    }
    return out;
}

std::string to_string(MonotoneKind k) {
    switch (k) {
        case MonotoneKind::PosNN: return "posnn";
        case MonotoneKind::MinMax: return "mm";
        case MonotoneKind::SmoothMM: return "smm";
        case MonotoneKind::Plain: return "plain";
    }
    return "?";
}

MonotoneKind monotone_kind_from_string(const std::string& s) {
    if (s == "posnn") return MonotoneKind::PosNN;
    if (s == "mm" || s == "minmax") return MonotoneKind::MinMax;
    if (s == "smm" || s == "smoothmm") return MonotoneKind::SmoothMM;
    if (s == "plain") return MonotoneKind::Plain;
    throw std::invalid_argument("unknown monotone net kind '" + s + "'");
}

}  // namespace monocost
