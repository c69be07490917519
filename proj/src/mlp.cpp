#include "monocost/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost {

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("MlpSpec: need at least one layer");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("MlpSpec: layer sizes must be positive");
    if (!positive_weights.empty() && positive_weights.size() != static_cast<std::size_t>(num_layers()))
        throw std::invalid_argument("MlpSpec: positive_weights must have one flag per layer");
}

Node positive_transform(const Node& w) { return scale(softplus(scale(w, 10.0)), 0.1); }

Tensor positive_transform_values(const Tensor& w) {
    Tensor out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = 10.0 * w[i];
        out[i] = 0.1 * (std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))));
    }
    return out;
}

Mlp::Mlp(MlpSpec spec, Rng& rng, const std::string& name_prefix) : spec_(std::move(spec)) {
    spec_.validate();
    for (int l = 0; l < spec_.num_layers(); ++l) {
        const int fan_in = spec_.layer_sizes[l];
        const int fan_out = spec_.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        weights_.push_back(Node::param(rng.uniform_tensor(fan_in, fan_out, -bound, bound),
                                       name_prefix + ".w" + std::to_string(l)));
        biases_.push_back(Node::param(rng.uniform_tensor(1, fan_out, -bound, bound),
                                      name_prefix + ".b" + std::to_string(l)));
    }
}

Node Mlp::forward(const Node& input) const {
    if (input.cols() != input_size())
        throw std::invalid_argument("Mlp::forward: input width " + std::to_string(input.cols()) +
                                    " != " + std::to_string(input_size()));
    ++forward_calls_;
    Node h = input;
    for (int l = 0; l < spec_.num_layers(); ++l) {
        Node w = weights_[l];
        if (!spec_.positive_weights.empty() && spec_.positive_weights[l]) w = positive_transform(w);
        h = affine(h, w, biases_[l]);
        if (l + 1 < spec_.num_layers()) h = tanh(h);
    }
    return h;
}

Tensor Mlp::forward_values(const Tensor& input) const {
    if (input.cols() != input_size())
        throw std::invalid_argument("Mlp::forward_values: input width mismatch");
    ++forward_calls_;
    Tensor h = input;
    for (int l = 0; l < spec_.num_layers(); ++l) {
        Tensor w = weights_[l].value();
        if (!spec_.positive_weights.empty() && spec_.positive_weights[l]) w = positive_transform_values(w);
        const Tensor& b = biases_[l].value();
        Tensor next(h.rows(), w.cols());
        for (int i = 0; i < h.rows(); ++i)
            for (int k = 0; k < h.cols(); ++k) {
                const double hik = h.at(i, k);
                if (hik == 0.0) continue;
                for (int j = 0; j < w.cols(); ++j) next.at(i, j) += hik * w.at(k, j);
            }
        const bool last = l + 1 == spec_.num_layers();
        for (int i = 0; i < next.rows(); ++i)
            for (int j = 0; j < next.cols(); ++j) {
                next.at(i, j) += b.at(0, j);
                if (!last) next.at(i, j) = std::tanh(next.at(i, j));
            }
        h = std::move(next);
    }
    return h;
}

Node Mlp::input_gradient(const Node& input) const {
    if (output_size() != 1) throw std::logic_error("Mlp::input_gradient: output must be scalar");
    // Forward pass, keeping hidden activations and effective weights.
    std::vector<Node> hidden;  // tanh outputs per hidden layer
    std::vector<Node> eff_w;
    Node h = input;
    for (int l = 0; l < spec_.num_layers(); ++l) {
        Node w = weights_[l];
        if (!spec_.positive_weights.empty() && spec_.positive_weights[l]) w = positive_transform(w);
        eff_w.push_back(w);
        h = affine(h, w, biases_[l]);
        if (l + 1 < spec_.num_layers()) {
            h = tanh(h);
            hidden.push_back(h);
        }
    }
    // Reverse chain: D_l = (D_{l+1} W_{l+1}^T) * (1 - h_l^2), then D_1 W_1^T.
    Node ones = Node::constant(Tensor::full(input.rows(), 1, 1.0));
    Node d = ones;
    for (int l = spec_.num_layers() - 1; l >= 1; --l) {
        d = matmul(d, transpose(eff_w[l]));
        Node one_minus = shift(neg(square(hidden[l - 1])), 1.0);
        d = mul(d, one_minus);
    }
    return matmul(d, transpose(eff_w[0]));
}

std::vector<Node> Mlp::params() const {
    std::vector<Node> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(weights_[l]);
        out.push_back(biases_[l]);
    }
    return out;
}

GaussHeadNodes split_gauss_head(const Node& head_out, int k, double sigma_floor) {
    if (head_out.cols() != 2 * k) throw std::invalid_argument("split_gauss_head: head width must be 2k");
    Node mu = slice_cols(head_out, 0, k);
    Node sigma = shift(softplus(slice_cols(head_out, k, k)), sigma_floor);
    return {mu, sigma};
}

}  // namespace monocost
