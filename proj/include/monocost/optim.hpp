#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "monocost/autodiff.hpp"

namespace monocost {

enum class OptKind { Sgd, Adam };

struct OptimizerConfig {
    OptKind kind = OptKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Applies the standard SGD / Adam update to a parameter list and zeroes the
// gradients afterwards. Adam moment state is keyed by parameter identity and
// allocated on first sight.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    const OptimizerConfig& config() const { return cfg_; }

    // Throws std::runtime_error naming the parameter if its gradient is not
    // finite.
    void step(const std::vector<Node>& params);

private:
    struct Moments {
        Tensor m, v;
    };

    OptimizerConfig cfg_;
    long t_ = 0;
    std::unordered_map<NodeImpl*, Moments> state_;
};

OptKind opt_kind_from_string(const std::string& s);
std::string to_string(OptKind k);

}  // namespace monocost
