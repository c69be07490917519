#include "monocost/gcm.hpp"

#include <cmath>
#include <stdexcept>

namespace monocost {

namespace {

const double kLogLikFloor = std::log(kLikFloor);
const double kLogLikCeil = std::log1p(-kLikFloor);  // log(1 - 1e-12)

Mlp make_head(int in, int hidden, int out, Rng& rng, const std::string& name) {
    MlpSpec spec;
    spec.layer_sizes = {in, hidden, hidden, out};
    return Mlp(spec, rng, name);
}

}  // namespace

GcmModel::GcmModel(GcmConfig cfg, Rng& rng) : cfg_(cfg) {
    if (cfg_.x_dim < 1 || cfg_.revenue_dim < 1 || cfg_.latent_dim < 1 || cfg_.hidden_dim < 1 ||
        cfg_.sample_count < 1)
        throw std::invalid_argument("GcmConfig: all dimensions and sample counts must be >= 1");
    encoder_ = make_head(cfg_.x_dim, cfg_.hidden_dim, 2 * cfg_.latent_dim, rng, "gcm.encoder");
    cost_head_ = make_head(cfg_.latent_dim, cfg_.hidden_dim, 2 * cfg_.revenue_dim, rng, "gcm.cost");
}

GcmModel::WeightParts GcmModel::weight_parts(const Node& x, const Node& r, int n, const Tensor& eps) const {
    auto enc = split_gauss_head(encoder_.forward(x), cfg_.latent_dim, cfg_.sigma_floor);
    Node mu_z = tile_rows(enc.mu, n);
    Node sigma_z = tile_rows(enc.sigma, n);
    Node z = add(mu_z, mul(sigma_z, Node::constant(eps)));

    Node log_prior = shift(scale(sum(square(z), 1), -0.5), -0.5 * gauss::kLog2Pi * cfg_.latent_dim);
    Node log_post = gauss::log_pdf_rows(mu_z, sigma_z, z);

    auto cost = split_gauss_head(cost_head_.forward(z), cfg_.revenue_dim, cfg_.sigma_floor);
    Node u = div(sub(tile_rows(r, n), cost.mu), cost.sigma);
    Node log_dom = clamp(sum(gauss::normal_log_cdf(u), 1), kLogLikFloor, kLogLikCeil);
    return {z, log_prior, log_post, log_dom};
}

Node GcmModel::log_weight(const std::vector<double>& x, const std::vector<double>& r, int y,
                          const std::vector<double>& eps) const {
    if (y != 0 && y != 1) throw std::invalid_argument("gcm log_weight: y must be 0 or 1");
    if (static_cast<int>(eps.size()) != cfg_.latent_dim)
        throw std::invalid_argument("gcm log_weight: eps dimension mismatch");
    Node xn = Node::constant(Tensor::row(x));
    Node rn = Node::constant(Tensor::row(r));
    WeightParts parts = weight_parts(xn, rn, 1, Tensor::row(eps));
    Node ll = y == 1 ? parts.log_dom : gauss::log1mexp(parts.log_dom);
    return add(ll, sub(parts.log_prior, parts.log_posterior));
}

Node GcmModel::loss(const Tensor& x, const Tensor& r, const std::vector<int>& y, Rng& rng) const {
    return loss_with_samples(x, r, y, cfg_.sample_count, rng);
}

Node GcmModel::loss_with_samples(const Tensor& x, const Tensor& r, const std::vector<int>& y,
                                 int n, Rng& rng) const {
    const int B = x.rows();
    if (B < 1) throw std::invalid_argument("gcm loss: empty batch");
    if (r.rows() != B || static_cast<int>(y.size()) != B)
        throw std::invalid_argument("gcm loss: batch row counts disagree");
    if (n < 1) throw std::invalid_argument("gcm loss: sample count must be >= 1");

    WeightParts parts = weight_parts(Node::constant(x), Node::constant(r), n,
                                     rng.normal_tensor(B * n, cfg_.latent_dim));
    Tensor y_col(B * n, 1);
    for (int b = 0; b < B; ++b) {
        if (y[b] != 0 && y[b] != 1) throw std::invalid_argument("gcm loss: labels must be 0/1");
        for (int s = 0; s < n; ++s) y_col.at(b * n + s, 0) = static_cast<double>(y[b]);
    }
    Node yv = Node::constant(std::move(y_col));
    Node ll = add(mul(yv, parts.log_dom), mul(shift(neg(yv), 1.0), gauss::log1mexp(parts.log_dom)));
    Node lw = add(ll, sub(parts.log_prior, parts.log_posterior));
    Node per_example = shift(group_logsumexp_rows(lw, n), -std::log(static_cast<double>(n)));
    Node out = scale(mean_all(per_example), -1.0);
    if (!out.value().all_finite()) throw std::runtime_error("gcm loss: non-finite objective");
    return out;
}

std::vector<double> GcmModel::predict(const std::vector<double>& x,
                                      const std::vector<std::vector<double>>& rs, Rng& rng,
                                      int n_samples) const {
    const int n = n_samples > 0 ? n_samples : cfg_.sample_count;
    const int m = cfg_.revenue_dim;
    if (static_cast<int>(x.size()) != cfg_.x_dim) throw std::invalid_argument("gcm predict: x dim mismatch");

    // One amortized encoder pass; z samples shared across every threshold.
    Tensor enc = encoder_.forward_values(Tensor::row(x));
    Tensor z(n, cfg_.latent_dim);
    for (int s = 0; s < n; ++s)
        for (int d = 0; d < cfg_.latent_dim; ++d) {
            const double mu = enc.at(0, d);
            const double raw = enc.at(0, cfg_.latent_dim + d);
            const double sigma = cfg_.sigma_floor + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
            z.at(s, d) = mu + sigma * rng.normal();
        }
    Tensor cost = cost_head_.forward_values(z);  // n x 2m
    std::vector<double> mu_c(static_cast<std::size_t>(n) * m), inv_sigma_c(mu_c.size());
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < m; ++i) {
            mu_c[s * m + i] = cost.at(s, i);
            const double raw = cost.at(s, m + i);
            const double sig = cfg_.sigma_floor + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
            inv_sigma_c[s * m + i] = 1.0 / sig;
        }

    std::vector<double> out;
    out.reserve(rs.size());
    for (const auto& r : rs) {
        if (static_cast<int>(r.size()) != m) throw std::invalid_argument("gcm predict: r dim mismatch");
        double acc = 0.0;
        if (m <= 4) {
            for (int s = 0; s < n; ++s) {
                double prod = 1.0;
                for (int i = 0; i < m; ++i)
                    prod *= gauss::std_normal_cdf((r[i] - mu_c[s * m + i]) * inv_sigma_c[s * m + i]);
                acc += prod;
            }
        } else {
            for (int s = 0; s < n; ++s) {
                double lg = 0.0;
                for (int i = 0; i < m; ++i)
                    lg += gauss::std_normal_log_cdf((r[i] - mu_c[s * m + i]) * inv_sigma_c[s * m + i]);
                acc += std::exp(lg);
            }
        }
        out.push_back(acc / n);
    }
    return out;
}

std::vector<double> GcmModel::predict_batch(const Tensor& x, const Tensor& r, Rng& rng) const {
    const int B = x.rows(), n = cfg_.sample_count, m = cfg_.revenue_dim;
    if (r.rows() != B) throw std::invalid_argument("gcm predict_batch: row counts disagree");
    Tensor enc = encoder_.forward_values(x);
    auto softplus_floor = [&](double v) {
        return cfg_.sigma_floor + std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    };
    Tensor z(B * n, cfg_.latent_dim);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s)
            for (int d = 0; d < cfg_.latent_dim; ++d)
                z.at(b * n + s, d) =
                    enc.at(b, d) + softplus_floor(enc.at(b, cfg_.latent_dim + d)) * rng.normal();
    Tensor cost = cost_head_.forward_values(z);
    std::vector<double> out(B, 0.0);
    for (int b = 0; b < B; ++b) {
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
            const int row = b * n + s;
            double lg = 0.0;
            for (int i = 0; i < m; ++i) {
                const double sig = softplus_floor(cost.at(row, m + i));
                lg += gauss::std_normal_log_cdf((r.at(b, i) - cost.at(row, i)) / sig);
            }
            acc += std::exp(lg);
        }
        out[b] = acc / n;
    }
    return out;
}

std::vector<Node> GcmModel::params() const {
    std::vector<Node> out = encoder_.params();
    for (const Node& p : cost_head_.params()) out.push_back(p);
    return out;
}

// ---- regression extension ----

GcmRegressor::GcmRegressor(GcmConfig cfg, Rng& rng) : core_(cfg, rng) {
    mu_t_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "gcm.mu_t");
    sigma_t_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "gcm.sigma_t");
    sigma_y_ = make_head(cfg.x_dim, cfg.hidden_dim, 1, rng, "gcm.sigma_y");
}

double GcmRegressor::mu_y(const std::vector<double>& x, const std::vector<double>& r,
                          const std::vector<double>& z) const {
    const auto& cfg = core_.cfg_;
    Tensor cost = core_.cost_head_.forward_values(Tensor::row(z));
    double log_dom = 0.0;
    for (int i = 0; i < cfg.revenue_dim; ++i) {
        const double raw = cost.at(0, cfg.revenue_dim + i);
        const double sig = cfg.sigma_floor + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
        log_dom += gauss::std_normal_log_cdf((r[i] - cost.at(0, i)) / sig);
    }
    const double p = std::min(std::max(std::exp(log_dom), kLikFloor), 1.0 - kLikFloor);
    const Tensor xr = Tensor::row(x);
    const double mt = mu_t_.forward_values(xr).at(0, 0);
    auto softplus_floor = [&](double v) {
        return cfg.sigma_floor + std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    };
    const double st = softplus_floor(sigma_t_.forward_values(xr).at(0, 0));
    const double sy = softplus_floor(sigma_y_.forward_values(xr).at(0, 0));
    return std::sqrt(sy * sy + st * st) * gauss::std_normal_quantile(p) + mt;
}

Node GcmRegressor::mu_y_rows(const Node& x_b, const GcmModel::WeightParts& parts, int n,
                             Node* sigma_y_out) const {
    const double floor = core_.cfg_.sigma_floor;
    Node p = exp(parts.log_dom);  // already clamped into (0,1)
    Node q = gauss::normal_quantile(p);
    Node mt = tile_rows(mu_t_.forward(x_b), n);
    Node st = tile_rows(shift(softplus(sigma_t_.forward(x_b)), floor), n);
    Node sy = tile_rows(shift(softplus(sigma_y_.forward(x_b)), floor), n);
    if (sigma_y_out) *sigma_y_out = sy;
    return add(mul(sqrt(add(square(sy), square(st))), q), mt);
}

Node GcmRegressor::loss(const Tensor& x, const Tensor& r, const std::vector<double>& y, Rng& rng) const {
    const auto& cfg = core_.cfg_;
    const int B = x.rows(), n = cfg.sample_count;
    if (r.rows() != B || static_cast<int>(y.size()) != B)
        throw std::invalid_argument("gcm continuous loss: batch row counts disagree");
    Node x_b = Node::constant(x);
    auto parts = core_.weight_parts(x_b, Node::constant(r), n, rng.normal_tensor(B * n, cfg.latent_dim));
    Node sy;
    Node muy = mu_y_rows(x_b, parts, n, &sy);
    Tensor y_col(B * n, 1);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s) y_col.at(b * n + s, 0) = y[b];
    Node resid = sub(Node::constant(std::move(y_col)), muy);
    Node fit = div(square(resid), scale(square(sy), 2.0));
    Node terms = add(add(fit, log(sy)), sub(parts.log_posterior, parts.log_prior));
    Node out = mean_all(terms);
    if (!out.value().all_finite()) throw std::runtime_error("gcm continuous loss: non-finite objective");
    return out;
}

Node GcmRegressor::pinball_loss(const Tensor& x, const std::vector<double>& y,
                                const std::vector<double>& r_level, Rng& rng) const {
    const auto& cfg = core_.cfg_;
    if (cfg.revenue_dim != 1)
        throw std::logic_error("gcm pinball loss: quantile levels require revenue_dim == 1");
    const int B = x.rows(), n = cfg.sample_count;
    if (static_cast<int>(y.size()) != B || r_level.size() != y.size())
        throw std::invalid_argument("gcm pinball loss: batch row counts disagree");
    Tensor r(B, 1);
    for (int b = 0; b < B; ++b) {
        if (!(r_level[b] > 0.0 && r_level[b] < 1.0))
            throw std::domain_error("gcm pinball loss: quantile level outside (0,1)");
        r.at(b, 0) = r_level[b];
    }
    Node x_b = Node::constant(x);
    auto parts = core_.weight_parts(x_b, Node::constant(r), n, rng.normal_tensor(B * n, cfg.latent_dim));
    Node sy;
    Node muy = mu_y_rows(x_b, parts, n, &sy);
    Node y_r = add(muy, mul(sy, Node::constant(rng.normal_tensor(B * n, 1))));
    Tensor y_col(B * n, 1), lvl_col(B * n, 1);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s) {
            y_col.at(b * n + s, 0) = y[b];
            lvl_col.at(b * n + s, 0) = r_level[b];
        }
    Node delta = sub(Node::constant(std::move(y_col)), y_r);
    Node lvl = Node::constant(std::move(lvl_col));
    Node rho = add(mul(lvl, relu(delta)), mul(shift(neg(lvl), 1.0), relu(neg(delta))));
    Node out = mean_all(rho);
    if (!out.value().all_finite()) throw std::runtime_error("gcm pinball loss: non-finite objective");
    return out;
}

std::vector<double> GcmRegressor::predict(const Tensor& x, const Tensor& r, Rng& rng) const {
    const auto& cfg = core_.cfg_;
    const int B = x.rows(), n = cfg.sample_count;
    if (r.rows() != B) throw std::invalid_argument("gcm regressor predict: row counts disagree");
    std::vector<double> out(B, 0.0);

    // Tape-free evaluation, one encoder pass over the whole batch.
    Tensor enc = core_.encoder_.forward_values(x);
    auto softplus_floor = [&](double v) {
        return cfg.sigma_floor + std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    };
    Tensor z(B * n, cfg.latent_dim);
    for (int b = 0; b < B; ++b)
        for (int s = 0; s < n; ++s)
            for (int d = 0; d < cfg.latent_dim; ++d)
                z.at(b * n + s, d) =
                    enc.at(b, d) + softplus_floor(enc.at(b, cfg.latent_dim + d)) * rng.normal();
    Tensor cost = core_.cost_head_.forward_values(z);
    Tensor mt = mu_t_.forward_values(x), st = sigma_t_.forward_values(x), sy = sigma_y_.forward_values(x);
    for (int b = 0; b < B; ++b) {
        const double mtb = mt.at(b, 0);
        const double stb = softplus_floor(st.at(b, 0));
        const double syb = softplus_floor(sy.at(b, 0));
        const double scale_b = std::sqrt(syb * syb + stb * stb);
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
            const int row = b * n + s;
            double log_dom = 0.0;
            for (int i = 0; i < cfg.revenue_dim; ++i) {
                const double sig = softplus_floor(cost.at(row, cfg.revenue_dim + i));
                log_dom += gauss::std_normal_log_cdf((r.at(b, i) - cost.at(row, i)) / sig);
            }
            const double p = std::min(std::max(std::exp(log_dom), kLikFloor), 1.0 - kLikFloor);
            acc += scale_b * gauss::std_normal_quantile(p) + mtb;
        }
        out[b] = acc / n;
    }
    return out;
}

std::vector<Node> GcmRegressor::params() const {
    std::vector<Node> out = core_.params();
    for (const Node& p : mu_t_.params()) out.push_back(p);
    for (const Node& p : sigma_t_.params()) out.push_back(p);
    for (const Node& p : sigma_y_.params()) out.push_back(p);
    return out;
}

double pinball(double level, double delta) {
    return delta > 0.0 ? level * delta : (1.0 - level) * (-delta);
}

}  // namespace monocost
