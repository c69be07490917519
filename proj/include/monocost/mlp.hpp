#pragma once

#include <string>
#include <vector>

#include "monocost/autodiff.hpp"
#include "monocost/rng.hpp"

namespace monocost {

enum class Activation { Tanh };

struct MlpSpec {
    std::vector<int> layer_sizes;        // chained extents, e.g. {in, h, h, out}
    Activation activation = Activation::Tanh;
    std::vector<bool> positive_weights;  // per weight layer; empty means all free

    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
    void validate() const;
};

// W+ = softplus(10 W) / 10: entrywise positive, differentiable, and close to
// identity for positive inputs.
Node positive_transform(const Node& w);
Tensor positive_transform_values(const Tensor& w);

// Feed-forward perceptron with tanh hidden activations and a linear final
// layer. Layers flagged positive route their weights through
// positive_transform.
class Mlp {
public:
    Mlp() = default;
    Mlp(MlpSpec spec, Rng& rng, const std::string& name_prefix);

    Node forward(const Node& input) const;
    Tensor forward_values(const Tensor& input) const;  // tape-free path

    // Exact d(out)/d(input) as a tape expression; requires a single output
    // column. Result has the input's shape, row b holding the gradient of
    // output row b.
    Node input_gradient(const Node& input) const;

    std::vector<Node> params() const;
    const MlpSpec& spec() const { return spec_; }
    int input_size() const { return spec_.layer_sizes.front(); }
    int output_size() const { return spec_.layer_sizes.back(); }
    long forward_calls() const { return forward_calls_; }
    void reset_forward_calls() { forward_calls_ = 0; }

    Node weight(int layer) const { return weights_[layer]; }
    Node bias(int layer) const { return biases_[layer]; }

private:
    MlpSpec spec_;
    std::vector<Node> weights_, biases_;
    mutable long forward_calls_ = 0;
};

// Output-head convention for Gaussian parameters: the first k columns are the
// mean, the last k are pre-softplus scales.
struct GaussHeadNodes {
    Node mu, sigma;
};
GaussHeadNodes split_gauss_head(const Node& head_out, int k, double sigma_floor);

}  // namespace monocost
