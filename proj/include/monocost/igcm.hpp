#pragma once

#include <vector>

#include "monocost/gauss.hpp"
#include "monocost/mlp.hpp"
#include "monocost/rng.hpp"

namespace monocost {

struct IgcmConfig {
    int x_dim = 1;
    int revenue_dim = 1;  // m
    int latent_dim = 4;   // D
    int kernel_dim = 0;   // defaults to revenue_dim (square projection)
    int hidden_dim = 16;
    int sample_count = 32;  // N z-samples
    int k_samples = 32;     // M reconstruction samples
    double sigma_floor = 1e-6;
    double delta_sigma_floor = 1e-3;  // reconstruction scale floor

    int k_dim() const { return kernel_dim > 0 ? kernel_dim : revenue_dim; }
};

// Implicit variant: a latent kernel revenue k drives both y (via the cost
// dominance event) and r (via an entrywise-positive projection). q(k|x,r)
// gives the kernel posterior; the classification term integrates k out in
// closed form.
class IgcmModel {
public:
    IgcmModel() = default;
    IgcmModel(IgcmConfig cfg, Rng& rng);

    // log N(r; W+ k + mu_dr(x), sigma_dr(x)) for a single example and a given
    // kernel sample.
    Node r_log_likelihood(const std::vector<double>& x, const std::vector<double>& r,
                          const std::vector<double>& k_sample) const;

    // Three-term objective: IWAE classification term (E_k in closed form),
    // log-mean reconstruction over M kernel samples, and KL[q(k|x,r) || p(k)].
    Node loss(const Tensor& x, const Tensor& r, const std::vector<int>& y, Rng& rng) const;

    // (1/N) sum_n E_k Pr(c < k | z_n); monotone in mu_k but not certified
    // monotone in r.
    double predict(const std::vector<double>& x, const std::vector<double>& r, Rng& rng) const;
    std::vector<double> predict_batch(const Tensor& x, const Tensor& r, Rng& rng) const;

    // Kernel posterior (mu_k then sigma_k) for one example; used by the
    // monotonicity property tests.
    std::pair<std::vector<double>, std::vector<double>> kernel_posterior(const std::vector<double>& x,
                                                                         const std::vector<double>& r) const;

    // The estimator as a function of an explicit kernel belief: (1/N) sum_n
    // of the closed-form E_k Pr(c < k | z_n). Strictly increasing in each
    // mu_k coordinate.
    double predict_given_kernel(const std::vector<double>& x, const std::vector<double>& mu_k,
                                const std::vector<double>& sigma_k, Rng& rng) const;
    // Mean of p(r|k) for a given kernel vector: W+ k + mu_dr(x).
    std::vector<double> reconstruction_mean(const std::vector<double>& x,
                                            const std::vector<double>& k) const;

    std::vector<Node> params() const;
    const IgcmConfig& config() const { return cfg_; }
    const Mlp& encoder_z() const { return encoder_z_; }
    const Mlp& encoder_k() const { return encoder_k_; }
    Tensor positive_projection() const;  // W+ values, k_dim x m

private:
    friend class IgcmRegressor;
    struct ZParts {
        Node z, log_prior, log_posterior;
    };
    ZParts z_parts(const Node& x, int n, const Tensor& eps) const;
    // log E_k Pr(c < k | z) rows, clamped; q_k tiled against (B*N) cost rows.
    Node log_dominance_rows(const Node& z, const Node& mu_k, const Node& sigma_k, int n) const;

    IgcmConfig cfg_;
    Mlp encoder_z_;   // x -> (mu_z, sigma_z raw)
    Mlp encoder_k_;   // [x, r] -> (mu_k, sigma_k raw)
    Mlp cost_head_;   // z -> (mu_c, sigma_c raw), k-space
    Mlp delta_head_;  // x -> (mu_dr, sigma_dr raw)
    Node w_raw_;      // k_dim x m, routed through positive_transform
};

// Regression variant mirroring the GCM continuous heads, with the
// reconstruction and kernel-KL terms retained.
class IgcmRegressor {
public:
    IgcmRegressor() = default;
    IgcmRegressor(IgcmConfig cfg, Rng& rng);

    Node loss(const Tensor& x, const Tensor& r, const std::vector<double>& y, Rng& rng) const;
    std::vector<double> predict(const Tensor& x, const Tensor& r, Rng& rng) const;
    std::vector<Node> params() const;
    const IgcmModel& core() const { return core_; }

private:
    IgcmModel core_;
    Mlp mu_t_, sigma_t_, sigma_y_;
};

}  // namespace monocost
