#pragma once

#include <string>
#include <vector>

#include "monocost/mlp.hpp"
#include "monocost/rng.hpp"

namespace monocost {

enum class MonotoneKind { PosNN, MinMax, SmoothMM, Plain };

struct MonotoneNetSpec {
    MonotoneKind kind = MonotoneKind::PosNN;
    int x_dim = 1;
    int r_dim = 1;
    int hidden = 16;          // posnn/plain backbone width; 0 = single linear layer
    int groups = 4;           // min-max geometry
    int units_per_group = 4;
    double smoothing_beta = 10.0;

    void validate() const;
};

// Scalar-output network f(x, r). PosNN and the Min-Max variants are
// non-decreasing in every coordinate of r by construction; Plain carries no
// constraint and is the backbone for the hint/pointwise regularizers.
class MonotoneNet {
public:
    MonotoneNet() = default;
    MonotoneNet(MonotoneNetSpec spec, Rng& rng, const std::string& name_prefix);

    Node forward(const Node& x, const Node& r) const;
    Tensor forward_values(const Tensor& x, const Tensor& r) const;

    // d(out)/d(r) as a tape expression (Plain kind only); rows align with the
    // batch, columns with r coordinates.
    Node r_gradient(const Node& x, const Node& r) const;

    std::vector<Node> params() const;
    const MonotoneNetSpec& spec() const { return spec_; }
    long forward_calls() const { return forward_calls_; }

private:
    Node units(const Node& x, const Node& r, int group) const;

    MonotoneNetSpec spec_;
    // posnn/plain: first layer split into an x block and an r block, then a
    // shared stack over the hidden width.
    Node wx0_, wr0_, b0_;
    Mlp tail_;           // hidden -> ... -> 1 (posnn: positive layers)
    bool has_tail_ = false;
    // min-max: per-group linear units
    std::vector<Node> mm_wx_, mm_wr_, mm_b_;
    mutable long forward_calls_ = 0;
};

// Pairwise ordering penalty: mean over sampled pairs (x, r1) vs (x, r2) with
// r1 < r2 of relu(f(x, r1) - f(x, r2)). Zero iff the sampled orderings are
// respected.
Node hint_penalty(const MonotoneNet& model, const Tensor& x, const Tensor& r, int pairs, Rng& rng);

// Pointwise negative-gradient penalty at the first `probes` batch rows:
// mean over probes of sum_i relu(-df/dr_i).
Node pwl_penalty(const MonotoneNet& model, const Tensor& x, const Tensor& r, int probes);

// Bounded-revenue squashing: elementwise sigmoid and its inverse.
std::vector<double> squash_revenue(const std::vector<double>& r);
std::vector<double> unsquash_revenue(const std::vector<double>& s);

std::string to_string(MonotoneKind k);
MonotoneKind monotone_kind_from_string(const std::string& s);

}  // namespace monocost
