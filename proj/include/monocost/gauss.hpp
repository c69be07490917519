#pragma once

#include <vector>

#include "monocost/autodiff.hpp"

namespace monocost::gauss {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);

// Phi(x), absolute error well below 1e-10 (erfc-backed).
double std_normal_cdf(double x);

// log Phi(x), finite for all representable x (asymptotic series in the far
// left tail where erfc underflows).
double std_normal_log_cdf(double x);

// Phi^{-1}(p) for p in (0,1): Acklam rational initialiser plus one Halley
// refinement step. Throws std::domain_error outside (0,1).
double std_normal_quantile(double p);

// Diagonal Gaussian over R^m: mu free, sigma strictly positive.
struct DiagGaussian {
    std::vector<double> mu;
    std::vector<double> sigma;

    DiagGaussian(std::vector<double> mu_in, std::vector<double> sigma_in);
    int dim() const { return static_cast<int>(mu.size()); }
};

double log_pdf(const DiagGaussian& g, const std::vector<double>& x);
std::vector<double> sample_reparam(const DiagGaussian& g, const std::vector<double>& eps);
double kl_to_std_normal(const DiagGaussian& g);

// Pr(c < r elementwise) = prod_i Phi((r_i - mu_i) / sigma_i). Computed in log
// space when the dimension exceeds 4.
double dominance_prob(const DiagGaussian& c, const std::vector<double>& threshold);

// E_{k}[Pr(c < k)] for independent diagonal Gaussians c and k:
// prod_i Phi((mu_k_i - mu_c_i) / sqrt(sigma_c_i^2 + sigma_k_i^2)).
double gaussian_dominance_prob(const DiagGaussian& c, const DiagGaussian& k);

// ---- tape ops ----

Node normal_cdf(const Node& x);
Node normal_log_cdf(const Node& x);
Node normal_quantile(const Node& p);

// log(1 - exp(s)) for s < 0; used for the y = 0 branch of the dominance
// likelihood.
Node log1mexp(const Node& s);

// Row-wise diagonal-Gaussian log density: mu, sigma, x all RxD (broadcast
// rules of the elementwise ops apply); result Rx1.
Node log_pdf_rows(const Node& mu, const Node& sigma, const Node& x);

// Row-wise KL(N(mu, sigma^2) || N(0, I)); result Rx1.
Node kl_to_std_normal_rows(const Node& mu, const Node& sigma);

}  // namespace monocost::gauss
