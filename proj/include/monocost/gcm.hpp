#pragma once

#include <vector>

#include "monocost/gauss.hpp"
#include "monocost/mlp.hpp"
#include "monocost/rng.hpp"

namespace monocost {

struct GcmConfig {
    int x_dim = 1;
    int revenue_dim = 1;  // m
    int latent_dim = 4;   // D
    int hidden_dim = 16;
    int sample_count = 32;  // N importance samples
    double sigma_floor = 1e-6;
};

// Latent-cost generative classifier. The encoder amortizes q(z|x); the cost
// head parameterizes the diagonal-Gaussian cost distribution given z and
// never sees r: the dominance probability against r is closed-form, which is
// what makes the predictor strictly monotone in r.
class GcmModel {
public:
    GcmModel() = default;
    GcmModel(GcmConfig cfg, Rng& rng);

    // Single-example log importance weight log[ P(c ~y r | z) p(z) / q(z|x) ]
    // at z = mu(x) + sigma(x) * eps. y selects the dominance event (1) or its
    // complement (0).
    Node log_weight(const std::vector<double>& x, const std::vector<double>& r, int y,
                    const std::vector<double>& eps) const;

    // Batched IWAE objective: mean over the batch of
    // -(logsumexp_n log w_n - log N). Throws std::runtime_error on
    // non-finite results.
    Node loss(const Tensor& x, const Tensor& r, const std::vector<int>& y, Rng& rng) const;
    Node loss_with_samples(const Tensor& x, const Tensor& r, const std::vector<int>& y, int n_samples,
                           Rng& rng) const;

    // Amortized prediction: one encoder pass per x; the z samples are shared
    // across all thresholds. Each output is Pr(y = 1 | x, r).
    std::vector<double> predict(const std::vector<double>& x, const std::vector<std::vector<double>>& rs,
                                Rng& rng, int n_samples = 0) const;

    // Row-wise scoring for evaluation: row i of x against row i of r, one
    // encoder pass for the whole batch.
    std::vector<double> predict_batch(const Tensor& x, const Tensor& r, Rng& rng) const;

    std::vector<Node> params() const;
    const GcmConfig& config() const { return cfg_; }
    const Mlp& encoder() const { return encoder_; }
    const Mlp& cost_head() const { return cost_head_; }
    Mlp& encoder_mut() { return encoder_; }

private:
    friend class GcmRegressor;
    // Shared pipeline: (B*N)x1 column of log weights; also exposes the
    // intermediate z rows plus prior/posterior log densities for the
    // continuous variants.
    struct WeightParts {
        Node z;             // (B*N) x D
        Node log_prior;     // (B*N) x 1
        Node log_posterior;  // (B*N) x 1
        Node log_dom;       // (B*N) x 1, log Pr(c < r | z), clamped
    };
    WeightParts weight_parts(const Node& x, const Node& r, int n_samples, const Tensor& eps) const;

    GcmConfig cfg_;
    Mlp encoder_;    // x -> (mu_z, sigma_z raw)
    Mlp cost_head_;  // z -> (mu_c, sigma_c raw)
};

// Regression extension: Gaussian heads mu_t(x), sigma_t(x), sigma_y(x) turn
// the dominance probability into a conditional mean via the probit link.
class GcmRegressor {
public:
    GcmRegressor() = default;
    GcmRegressor(GcmConfig cfg, Rng& rng);

    // mu_y(x, r, z) = sqrt(sigma_y^2 + sigma_t^2) * Phi^{-1}(Pr(r > c | r,z)) + mu_t
    double mu_y(const std::vector<double>& x, const std::vector<double>& r,
                const std::vector<double>& z) const;

    // Squared-residual variational objective, p(x|z) dropped.
    Node loss(const Tensor& x, const Tensor& r, const std::vector<double>& y, Rng& rng) const;

    // Quantile objective: r is the per-example quantile level in (0,1), fed to
    // the model as its one-dimensional revenue. Expectation over sampled
    // y_r = mu_y + sigma_y * eps' of the pinball loss.
    Node pinball_loss(const Tensor& x, const std::vector<double>& y, const std::vector<double>& r_level,
                      Rng& rng) const;

    // Predicted conditional mean (or r-th quantile): average of mu_y over N
    // shared z samples; one encoder pass per batch.
    std::vector<double> predict(const Tensor& x, const Tensor& r, Rng& rng) const;

    std::vector<Node> params() const;
    const GcmModel& core() const { return core_; }
    GcmModel& core_mut() { return core_; }

private:
    Node mu_y_rows(const Node& x_b, const GcmModel::WeightParts& parts, int n, Node* sigma_y_out) const;

    GcmModel core_;
    Mlp mu_t_, sigma_t_, sigma_y_;  // each x -> 1 (scales pre-softplus)
};

// Dominance likelihoods are clamped into [kLikFloor, 1 - kLikFloor] before
// logs and probit links.
inline constexpr double kLikFloor = 1e-12;

double pinball(double level, double delta);  // rho_r

}  // namespace monocost
