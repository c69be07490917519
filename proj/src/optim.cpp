#include "monocost/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost {

void Optimizer::step(const std::vector<Node>& params) {
    for (const Node& p : params) {
        if (!p.get()->requires_grad) continue;
        const Tensor& g = p.grad();
        if (!g.all_finite())
            throw std::runtime_error("optimizer step: non-finite gradient in parameter '" + p.name() + "'");
    }
    ++t_;
    const double lr = cfg_.learning_rate;
    for (const Node& p : params) {
        NodeImpl* impl = p.get();
        if (!impl->requires_grad) continue;
        Tensor& w = impl->value;
        Tensor& g = impl->ensure_grad();
        if (cfg_.kind == OptKind::Sgd) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        } else {
            Moments& mom = state_[impl];
            if (mom.m.size() == 0) {
                mom.m = Tensor(w.rows(), w.cols());
                mom.v = Tensor(w.rows(), w.cols());
            }
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < w.size(); ++i) {
                mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
                mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double mhat = mom.m[i] / bc1;
                const double vhat = mom.v[i] / bc2;
                w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
        if (!w.all_finite())
            throw std::runtime_error("optimizer step: parameter '" + p.name() + "' became non-finite");
        g.fill(0.0);
    }
}

OptKind opt_kind_from_string(const std::string& s) {
    if (s == "sgd" || s == "SGD") return OptKind::Sgd;
    if (s == "adam" || s == "ADAM" || s == "Adam") return OptKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd or adam)");
}

std::string to_string(OptKind k) { return k == OptKind::Sgd ? "sgd" : "adam"; }

}  // namespace monocost
