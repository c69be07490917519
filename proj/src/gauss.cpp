#include "monocost/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost::gauss {

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_log_pdf(double x) { return -0.5 * x * x - 0.5 * kLog2Pi; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double std_normal_log_cdf(double x) {
    if (x >= -34.0) {
        return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    }
    // Mills-ratio asymptotic expansion; erfc underflows near x = -38.
    const double x2 = x * x;
    const double series = -1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * kLog2Pi + std::log1p(series);
}

namespace {

// Acklam's rational approximation to the probit function (relative error
// below 1.15e-9 on (0,1)).
double acklam_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p must lie in (0,1)");
    double x = acklam_quantile(p);
    const double pdf = std_normal_pdf(x);
    if (pdf > 1e-300) {  // one Halley step
        const double u = (std_normal_cdf(x) - p) / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

DiagGaussian::DiagGaussian(std::vector<double> mu_in, std::vector<double> sigma_in)
    : mu(std::move(mu_in)), sigma(std::move(sigma_in)) {
    if (mu.size() != sigma.size()) throw std::invalid_argument("DiagGaussian: mu/sigma length mismatch");
    for (double s : sigma)
        if (!(s > 0.0)) throw std::invalid_argument("DiagGaussian: sigma must be strictly positive");
}

double log_pdf(const DiagGaussian& g, const std::vector<double>& x) {
    if (x.size() != g.mu.size()) throw std::invalid_argument("log_pdf: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - g.mu[i]) / g.sigma[i];
        acc += -0.5 * u * u - std::log(g.sigma[i]) - 0.5 * kLog2Pi;
    }
    return acc;
}

std::vector<double> sample_reparam(const DiagGaussian& g, const std::vector<double>& eps) {
    if (eps.size() != g.mu.size()) throw std::invalid_argument("sample_reparam: dimension mismatch");
    std::vector<double> z(eps.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = g.mu[i] + g.sigma[i] * eps[i];
    return z;
}

double kl_to_std_normal(const DiagGaussian& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.mu.size(); ++i) {
        const double s2 = g.sigma[i] * g.sigma[i];
        acc += 0.5 * (s2 + g.mu[i] * g.mu[i] - 1.0) - std::log(g.sigma[i]);
    }
    return acc;
}

double dominance_prob(const DiagGaussian& c, const std::vector<double>& threshold) {
    if (threshold.size() != c.mu.size()) throw std::invalid_argument("dominance_prob: dimension mismatch");
    const int m = c.dim();
    if (m <= 4) {
        double p = 1.0;
        for (int i = 0; i < m; ++i) p *= std_normal_cdf((threshold[i] - c.mu[i]) / c.sigma[i]);
        return p;
    }
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std_normal_log_cdf((threshold[i] - c.mu[i]) / c.sigma[i]);
    return std::exp(s);
}

double gaussian_dominance_prob(const DiagGaussian& c, const DiagGaussian& k) {
    if (c.mu.size() != k.mu.size())
        throw std::invalid_argument("gaussian_dominance_prob: dimension mismatch");
    const int m = c.dim();
    auto u = [&](int i) {
        return (k.mu[i] - c.mu[i]) / std::sqrt(c.sigma[i] * c.sigma[i] + k.sigma[i] * k.sigma[i]);
    };
    if (m <= 4) {
        double p = 1.0;
        for (int i = 0; i < m; ++i) p *= std_normal_cdf(u(i));
        return p;
    }
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std_normal_log_cdf(u(i));
    return std::exp(s);
}

namespace {

double d_normal_cdf(double x, double) { return std_normal_pdf(x); }

double d_normal_log_cdf(double x, double y) { return std::exp(std_normal_log_pdf(x) - y); }

double quantile_checked(double p) { return std_normal_quantile(p); }

double d_normal_quantile(double, double y) { return kSqrt2Pi * std::exp(0.5 * y * y); }

double log1mexp_val(double s) {
    if (!(s < 0.0)) throw std::domain_error("log1mexp: argument must be negative");
    // Two-branch form keeps full precision on both sides of -ln 2.
    return s > -M_LN2 ? std::log(-std::expm1(s)) : std::log1p(-std::exp(s));
}

double d_log1mexp(double s, double y) { return -std::exp(s - y); }

}  // namespace

Node normal_cdf(const Node& x) { return unary_map(x, std_normal_cdf, d_normal_cdf); }

Node normal_log_cdf(const Node& x) { return unary_map(x, std_normal_log_cdf, d_normal_log_cdf); }

Node normal_quantile(const Node& p) { return unary_map(p, quantile_checked, d_normal_quantile); }

Node log1mexp(const Node& s) { return unary_map(s, log1mexp_val, d_log1mexp); }

Node log_pdf_rows(const Node& mu, const Node& sigma, const Node& x) {
    Node u = div(sub(x, mu), sigma);
    Node terms = sub(scale(square(u), -0.5), log(sigma));
    const int d = std::max(x.cols(), mu.cols());
    return shift(sum(terms, 1), -0.5 * kLog2Pi * d);
}

Node kl_to_std_normal_rows(const Node& mu, const Node& sigma) {
    Node t = scale(shift(add(square(sigma), square(mu)), -1.0), 0.5);
    return sum(sub(t, log(sigma)), 1);
}

}  // namespace monocost::gauss
