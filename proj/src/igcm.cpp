#include "monocost/igcm.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost {

namespace {

const double kLogFloor = std::log(1e-12);
const double kLogCeil = std::log1p(-1e-12);

Mlp make_head(int in, int hidden, int out, Rng& rng, const std::string& name) {
    MlpSpec spec;
    spec.layer_sizes = {in, hidden, hidden, out};
    return Mlp(spec, rng, name);
}

Tensor hcat(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    return out;
}

double softplus_floor(double v, double floor) {
    return floor + std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

}  // namespace

IgcmModel::IgcmModel(IgcmConfig cfg, Rng& rng) : cfg_(cfg) {
    if (cfg_.x_dim < 1 || cfg_.revenue_dim < 1 || cfg_.latent_dim < 1 || cfg_.hidden_dim < 1 ||
        cfg_.sample_count < 1 || cfg_.k_samples < 1)
        throw std::invalid_argument("IgcmConfig: dimensions and sample counts must be >= 1");
    const int k = cfg_.k_dim();
    encoder_z_ = make_head(cfg_.x_dim, cfg_.hidden_dim, 2 * cfg_.latent_dim, rng, "igcm.encoder_z");
    encoder_k_ = make_head(cfg_.x_dim + cfg_.revenue_dim, cfg_.hidden_dim, 2 * k, rng, "igcm.encoder_k");
    cost_head_ = make_head(cfg_.latent_dim, cfg_.hidden_dim, 2 * k, rng, "igcm.cost");
    delta_head_ = make_head(cfg_.x_dim, cfg_.hidden_dim, 2 * cfg_.revenue_dim, rng, "igcm.delta");
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    w_raw_ = Node::param(rng.uniform_tensor(k, cfg_.revenue_dim, -bound, bound), "igcm.w");
}

IgcmModel::ZParts IgcmModel::z_parts(const Node& x, int n, const Tensor& eps) const {
    auto enc = split_gauss_head(encoder_z_.forward(x), cfg_.latent_dim, cfg_.sigma_floor);
    Node mu_z = tile_rows(enc.mu, n);
    Node sigma_z = tile_rows(enc.sigma, n);
    Node z = add(mu_z, mul(sigma_z, Node::constant(eps)));
    Node log_prior = shift(scale(sum(square(z), 1), -0.5), -0.5 * gauss::kLog2Pi * cfg_.latent_dim);
    Node log_post = gauss::log_pdf_rows(mu_z, sigma_z, z);
    return {z, log_prior, log_post};
}

Node IgcmModel::log_dominance_rows(const Node& z, const Node& mu_k, const Node& sigma_k, int n) const {
    const int k = cfg_.k_dim();
    auto cost = split_gauss_head(cost_head_.forward(z), k, cfg_.sigma_floor);
    Node mu_k_t = tile_rows(mu_k, n);
    Node sigma_k_t = tile_rows(sigma_k, n);
    Node denom = sqrt(add(square(cost.sigma), square(sigma_k_t)));
    Node u = div(sub(mu_k_t, cost.mu), denom);
    return clamp(sum(gauss::normal_log_cdf(u), 1), kLogFloor, kLogCeil);
}

Node IgcmModel::r_log_likelihood(const std::vector<double>& x, const std::vector<double>& r,
                                 const std::vector<double>& k_sample) const {
    if (static_cast<int>(x.size()) != cfg_.x_dim || static_cast<int>(r.size()) != cfg_.revenue_dim ||
        static_cast<int>(k_sample.size()) != cfg_.k_dim())
        throw std::invalid_argument("igcm r_log_likelihood: dimension mismatch");
    Node xn = Node::constant(Tensor::row(x));
    auto delta = split_gauss_head(delta_head_.forward(xn), cfg_.revenue_dim, cfg_.delta_sigma_floor);
    Node kn = Node::constant(Tensor::row(k_sample));
    Node mean_r = add(matmul(kn, positive_transform(w_raw_)), delta.mu);
    return gauss::log_pdf_rows(mean_r, delta.sigma, Node::constant(Tensor::row(r)));
}

Node IgcmModel::loss(const Tensor& x, const Tensor& r, const std::vector<int>& y, Rng& rng) const {
    const int B = x.rows();
    const int n = cfg_.sample_count, M = cfg_.k_samples, k = cfg_.k_dim();
    if (r.rows() != B || static_cast<int>(y.size()) != B)
        throw std::invalid_argument("igcm loss: batch row counts disagree");

    Node x_b = Node::constant(x);
    Node r_b = Node::constant(r);
    auto zs = z_parts(x_b, n, rng.normal_tensor(B * n, cfg_.latent_dim));
    auto qk = split_gauss_head(encoder_k_.forward(concat_cols({x_b, r_b})), k, cfg_.sigma_floor);

    // Classification term: the inner E_k is closed form.
    Node log_dom = log_dominance_rows(zs.z, qk.mu, qk.sigma, n);
    Tensor y_col(B * n, 1);
    for (int b = 0; b < B; ++b) {
        if (y[b] != 0 && y[b] != 1) throw std::invalid_argument("igcm loss: labels must be 0/1");
        for (int s = 0; s < n; ++s) y_col.at(b * n + s, 0) = static_cast<double>(y[b]);
    }
    Node yv = Node::constant(std::move(y_col));
    Node ll = add(mul(yv, log_dom), mul(shift(neg(yv), 1.0), gauss::log1mexp(log_dom)));
    Node lw = add(ll, sub(zs.log_prior, zs.log_posterior));
    Node term1 = scale(shift(group_logsumexp_rows(lw, n), -std::log(static_cast<double>(n))), -1.0);

    // Reconstruction term over M reparameterized kernel samples.
    Node mu_k_m = tile_rows(qk.mu, M);
    Node sigma_k_m = tile_rows(qk.sigma, M);
    Node k_s = add(mu_k_m, mul(sigma_k_m, Node::constant(rng.normal_tensor(B * M, k))));
    auto delta = split_gauss_head(delta_head_.forward(x_b), cfg_.revenue_dim, cfg_.delta_sigma_floor);
    Node mean_r = add(matmul(k_s, positive_transform(w_raw_)), tile_rows(delta.mu, M));
    Node lpr = gauss::log_pdf_rows(mean_r, tile_rows(delta.sigma, M), tile_rows(r_b, M));
    Node term2 = scale(shift(group_logsumexp_rows(lpr, M), -std::log(static_cast<double>(M))), -1.0);

    Node term3 = gauss::kl_to_std_normal_rows(qk.mu, qk.sigma);

    Node out = mean_all(add(add(term1, term2), term3));
    if (!out.value().all_finite()) throw std::runtime_error("igcm loss: non-finite objective");
    return out;
}

std::pair<std::vector<double>, std::vector<double>> IgcmModel::kernel_posterior(
    const std::vector<double>& x, const std::vector<double>& r) const {
    const int k = cfg_.k_dim();
    Tensor out = encoder_k_.forward_values(hcat(Tensor::row(x), Tensor::row(r)));
    std::vector<double> mu(k), sigma(k);
    for (int i = 0; i < k; ++i) {
        mu[i] = out.at(0, i);
        sigma[i] = softplus_floor(out.at(0, k + i), cfg_.sigma_floor);
    }
    return {mu, sigma};
}

std::vector<double> IgcmModel::reconstruction_mean(const std::vector<double>& x,
                                                   const std::vector<double>& k) const {
    Tensor wp = positive_projection();
    Tensor delta = delta_head_.forward_values(Tensor::row(x));
    std::vector<double> out(cfg_.revenue_dim);
    for (int j = 0; j < cfg_.revenue_dim; ++j) {
        double s = delta.at(0, j);
        for (int i = 0; i < cfg_.k_dim(); ++i) s += k[i] * wp.at(i, j);
        out[j] = s;
    }
    return out;
}

double IgcmModel::predict(const std::vector<double>& x, const std::vector<double>& r, Rng& rng) const {
    Tensor xr(1, cfg_.x_dim), rr(1, cfg_.revenue_dim);
    for (int j = 0; j < cfg_.x_dim; ++j) xr.at(0, j) = x[j];
    for (int j = 0; j < cfg_.revenue_dim; ++j) rr.at(0, j) = r[j];
    return predict_batch(xr, rr, rng)[0];
}

std::vector<double> IgcmModel::predict_batch(const Tensor& x, const Tensor& r, Rng& rng) const {
    const int B = x.rows(), n = cfg_.sample_count, k = cfg_.k_dim();
    if (r.rows() != B) throw std::invalid_argument("igcm predict: row counts disagree");
    Tensor enc = encoder_z_.forward_values(x);
    Tensor z(B * n, cfg_.latent_dim);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s)
            for (int d = 0; d < cfg_.latent_dim; ++d)
                z.at(b * n + s, d) = enc.at(b, d) +
                                     softplus_floor(enc.at(b, cfg_.latent_dim + d), cfg_.sigma_floor) *
                                         rng.normal();
    Tensor cost = cost_head_.forward_values(z);
    Tensor qk = encoder_k_.forward_values(hcat(x, r));
    std::vector<double> out(B, 0.0);
    for (int b = 0; b < B; ++b) {
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
            const int row = b * n + s;
            double lg = 0.0;
            for (int i = 0; i < k; ++i) {
                const double mu_c = cost.at(row, i);
                const double sc = softplus_floor(cost.at(row, k + i), cfg_.sigma_floor);
                const double mu_k = qk.at(b, i);
                const double sk = softplus_floor(qk.at(b, k + i), cfg_.sigma_floor);
                lg += gauss::std_normal_log_cdf((mu_k - mu_c) / std::sqrt(sc * sc + sk * sk));
            }
            acc += std::exp(lg);
        }
        out[b] = acc / n;
    }
    return out;
}

double IgcmModel::predict_given_kernel(const std::vector<double>& x, const std::vector<double>& mu_k,
                                       const std::vector<double>& sigma_k, Rng& rng) const {
    const int n = cfg_.sample_count, k = cfg_.k_dim();
    if (static_cast<int>(mu_k.size()) != k || static_cast<int>(sigma_k.size()) != k)
        throw std::invalid_argument("predict_given_kernel: kernel dimension mismatch");
    Tensor enc = encoder_z_.forward_values(Tensor::row(x));
    Tensor z(n, cfg_.latent_dim);
    for (int s = 0; s < n; ++s)
        for (int d = 0; d < cfg_.latent_dim; ++d)
            z.at(s, d) = enc.at(0, d) +
                         softplus_floor(enc.at(0, cfg_.latent_dim + d), cfg_.sigma_floor) * rng.normal();
    Tensor cost = cost_head_.forward_values(z);
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        double lg = 0.0;
        for (int i = 0; i < k; ++i) {
            const double sc = softplus_floor(cost.at(s, k + i), cfg_.sigma_floor);
            lg += gauss::std_normal_log_cdf((mu_k[i] - cost.at(s, i)) /
                                            std::sqrt(sc * sc + sigma_k[i] * sigma_k[i]));
        }
        acc += std::exp(lg);
    }
    return acc / n;
}

Tensor IgcmModel::positive_projection() const { return positive_transform_values(w_raw_.value()); }

std::vector<Node> IgcmModel::params() const {
    std::vector<Node> out = encoder_z_.params();
    for (const Node& p : encoder_k_.params()) out.push_back(p);
    for (const Node& p : cost_head_.params()) out.push_back(p);
    for (const Node& p : delta_head_.params()) out.push_back(p);
    out.push_back(w_raw_);
    return out;
}

// ---- regression variant ----

IgcmRegressor::IgcmRegressor(IgcmConfig cfg, Rng& rng) : core_(cfg, rng) {
    mu_t_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "igcm.mu_t");
    sigma_t_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "igcm.sigma_t");
    sigma_y_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "igcm.sigma_y");
}

Node IgcmRegressor::loss(const Tensor& x, const Tensor& r, const std::vector<double>& y, Rng& rng) const {
    const auto& cfg = core_.cfg_;
    const int B = x.rows(), n = cfg.sample_count, M = cfg.k_samples, k = cfg.k_dim();
    if (r.rows() != B || static_cast<int>(y.size()) != B)
        throw std::invalid_argument("igcm continuous loss: batch row counts disagree");

    Node x_b = Node::constant(x);
    Node r_b = Node::constant(r);
    auto zs = core_.z_parts(x_b, n, rng.normal_tensor(B * n, cfg.latent_dim));
    auto qk = split_gauss_head(core_.encoder_k_.forward(concat_cols({x_b, r_b})), k, cfg.sigma_floor);

    Node p = exp(core_.log_dominance_rows(zs.z, qk.mu, qk.sigma, n));
    Node q = gauss::normal_quantile(p);
    const double floor = cfg.sigma_floor;
    Node mt = tile_rows(mu_t_.forward(x_b), n);
    Node st = tile_rows(shift(softplus(sigma_t_.forward(x_b)), floor), n);
    Node sy = tile_rows(shift(softplus(sigma_y_.forward(x_b)), floor), n);
    Node muy = add(mul(sqrt(add(square(sy), square(st))), q), mt);

    Tensor y_col(B * n, 1);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s) y_col.at(b * n + s, 0) = y[b];
    Node resid = sub(Node::constant(std::move(y_col)), muy);
    Node fit = add(add(div(square(resid), scale(square(sy), 2.0)), log(sy)),
                   sub(zs.log_posterior, zs.log_prior));
    Node term_fit = group_mean_rows(fit, n);

    Node mu_k_m = tile_rows(qk.mu, M);
    Node sigma_k_m = tile_rows(qk.sigma, M);
    Node k_s = add(mu_k_m, mul(sigma_k_m, Node::constant(rng.normal_tensor(B * M, k))));
    auto delta = split_gauss_head(core_.delta_head_.forward(x_b), cfg.revenue_dim, cfg.delta_sigma_floor);
    Node mean_r = add(matmul(k_s, positive_transform(core_.w_raw_)), tile_rows(delta.mu, M));
    Node lpr = gauss::log_pdf_rows(mean_r, tile_rows(delta.sigma, M), tile_rows(r_b, M));
    Node term2 = scale(shift(group_logsumexp_rows(lpr, M), -std::log(static_cast<double>(M))), -1.0);

    Node term3 = gauss::kl_to_std_normal_rows(qk.mu, qk.sigma);
    Node out = mean_all(add(add(term_fit, term2), term3));
    if (!out.value().all_finite()) throw std::runtime_error("igcm continuous loss: non-finite objective");
    return out;
}

std::vector<double> IgcmRegressor::predict(const Tensor& x, const Tensor& r, Rng& rng) const {
    const auto& cfg = core_.cfg_;
    const int B = x.rows(), n = cfg.sample_count, k = cfg.k_dim();
    Tensor enc = core_.encoder_z_.forward_values(x);
    Tensor z(B * n, cfg.latent_dim);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s)
            for (int d = 0; d < cfg.latent_dim; ++d)
                z.at(b * n + s, d) = enc.at(b, d) +
                                     softplus_floor(enc.at(b, cfg.latent_dim + d), cfg.sigma_floor) *
                                         rng.normal();
    Tensor cost = core_.cost_head_.forward_values(z);
    Tensor qk = core_.encoder_k_.forward_values(hcat(x, r));
    Tensor mt = mu_t_.forward_values(x), st = sigma_t_.forward_values(x), sy = sigma_y_.forward_values(x);
    std::vector<double> out(B, 0.0);
    for (int b = 0; b < B; ++b) {
        const double mtb = mt.at(b, 0);
        const double stb = softplus_floor(st.at(b, 0), cfg.sigma_floor);
        const double syb = softplus_floor(sy.at(b, 0), cfg.sigma_floor);
        const double scale_b = std::sqrt(syb * syb + stb * stb);
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
            const int row = b * n + s;
            double lg = 0.0;
            for (int i = 0; i < k; ++i) {
                const double sc = softplus_floor(cost.at(row, k + i), cfg.sigma_floor);
                const double sk = softplus_floor(qk.at(b, k + i), cfg.sigma_floor);
                lg += gauss::std_normal_log_cdf((qk.at(b, i) - cost.at(row, i)) / std::sqrt(sc * sc + sk * sk));
            }
            const double pv = std::min(std::max(std::exp(lg), 1e-12), 1.0 - 1e-12);
            acc += scale_b * gauss::std_normal_quantile(pv) + mtb;
        }
        out[b] = acc / n;
    }
    return out;
}

std::vector<Node> IgcmRegressor::params() const {
    std::vector<Node> out = core_.params();
    for (const Node& p : mu_t_.params()) out.push_back(p);
    for (const Node& p : sigma_t_.params()) out.push_back(p);
    for (const Node& p : sigma_y_.params()) out.push_back(p);
    return out;
}

}  // namespace monocost
