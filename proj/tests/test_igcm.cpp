#include <doctest.h>

#include <cmath>

#include "monocost/igcm.hpp"
#include "monocost/serialize.hpp"
#include "oracles.hpp"

using namespace monocost;

namespace {

const double kUnitSigmaRaw = std::log(std::exp(1.0 - 1e-6) - 1.0);

IgcmConfig small_config(int x_dim = 2, int m = 2, int d = 2, int hidden = 4, int n = 3, int M = 3) {
    IgcmConfig c;
    c.x_dim = x_dim;
    c.revenue_dim = m;
    c.latent_dim = d;
    c.hidden_dim = hidden;
    c.sample_count = n;
    c.k_samples = M;
    return c;
}

void zero_prefixed(const IgcmModel& model, const std::string& prefix) {
    for (const Node& p : model.params())
        if (p.name().rfind(prefix, 0) == 0) p.get()->value.fill(0.0);
}

std::vector<double> row_of(Rng& rng, int n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("r_log_likelihood: degenerate projection reduces to the delta head") {
    Rng rng(3);
    IgcmModel model(small_config(), rng);
    // Push the raw projection far negative: W+ ~ exp(-10|w|)/10 ~ 0.
    for (const Node& p : model.params())
        if (p.name() == "igcm.w") p.get()->value.fill(-20.0);

    std::vector<double> x = row_of(rng, 2), r = row_of(rng, 2), k = row_of(rng, 2);
    // With W+ ~ 0 the reconstruction mean ignores k entirely, so the log
    // likelihood collapses to the delta-head Gaussian.
    auto at_zero = model.reconstruction_mean(x, {0.0, 0.0});
    auto at_k = model.reconstruction_mean(x, k);
    CHECK(at_k[0] == doctest::Approx(at_zero[0]).epsilon(1e-12));
    CHECK(at_k[1] == doctest::Approx(at_zero[1]).epsilon(1e-12));
    CHECK(model.r_log_likelihood(x, r, k).value()[0] ==
          doctest::Approx(model.r_log_likelihood(x, r, {0.0, 0.0}).value()[0]).epsilon(1e-10));
}

TEST_CASE("r_log_likelihood: mode value and gauss composition oracle") {
    Rng rng(5);
    IgcmModel model(small_config(), rng);
    std::vector<double> x = row_of(rng, 2), k = row_of(rng, 2);

    // At r equal to the reconstruction mean the log density is its maximum.
    std::vector<double> r_star = model.reconstruction_mean(x, k);
    const double at_mode = model.r_log_likelihood(x, r_star, k).value()[0];
    std::vector<double> r = row_of(rng, 2);
    CHECK(model.r_log_likelihood(x, r, k).value()[0] <= at_mode);

    // Quadratic log-density: moving one unit then two units off the mode in
    // the same coordinate scales the drop by four.
    std::vector<double> probe = r_star, probe2 = r_star;
    probe[0] += 1.0;
    probe2[0] += 2.0;
    const double one_off = model.r_log_likelihood(x, probe, k).value()[0];
    const double two_off = model.r_log_likelihood(x, probe2, k).value()[0];
    CHECK(two_off - at_mode == doctest::Approx(4.0 * (one_off - at_mode)).epsilon(1e-9));
}

TEST_CASE("loss: kernel KL term vanishes when q_k is the prior") {
    Rng rng(7);
    IgcmModel model(small_config(), rng);
    zero_prefixed(model, "igcm.encoder_k");
    Node b_last = model.encoder_k().bias(model.encoder_k().spec().num_layers() - 1);
    for (int j = 0; j < 2; ++j) b_last.get()->value.at(0, 2 + j) = kUnitSigmaRaw;

    auto [mu_k, sigma_k] = model.kernel_posterior({0.3, -0.2}, {0.5, 0.1});
    gauss::DiagGaussian qk(mu_k, sigma_k);
    CHECK(gauss::kl_to_std_normal(qk) < 1e-10);
}

TEST_CASE("loss: N=M=1 with prior z-encoder matches a gauss composition oracle") {
    Rng rng(11);
    IgcmConfig cfg = small_config(2, 2, 2, 4, 1, 1);
    IgcmModel model(cfg, rng);
    zero_prefixed(model, "igcm.encoder_z");
    Node bz = model.encoder_z().bias(model.encoder_z().spec().num_layers() - 1);
    for (int j = 0; j < 2; ++j) bz.get()->value.at(0, 2 + j) = kUnitSigmaRaw;

    Tensor x = rng.normal_tensor(1, 2), r = rng.normal_tensor(1, 2);
    std::vector<double> xv = {x.at(0, 0), x.at(0, 1)}, rv = {r.at(0, 0), r.at(0, 1)};

    Rng loss_rng(401);
    const double loss = model.loss(x, r, {1}, loss_rng).value()[0];

    // Replay: loss draws z-eps (1x2) first, then k-eps (1x2).
    Rng replay(401);
    Tensor z_eps = replay.normal_tensor(1, 2);
    Tensor k_eps = replay.normal_tensor(1, 2);

    auto [mu_k, sigma_k] = model.kernel_posterior(xv, rv);
    // term1: closed-form dominance under z = eps (prior encoder).
    Tensor cost = model.cost_head().forward_values(z_eps);
    double lg = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double raw = cost.at(0, 2 + i);
        const double sc = 1e-6 + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
        lg += gauss::std_normal_log_cdf((mu_k[i] - cost.at(0, i)) /
                                        std::sqrt(sc * sc + sigma_k[i] * sigma_k[i]));
    }
    const double term1 = -lg;
    // term2: reconstruction at the reparameterized kernel sample.
    std::vector<double> k_s(2);
    for (int i = 0; i < 2; ++i) k_s[i] = mu_k[i] + sigma_k[i] * k_eps.at(0, i);
    const double term2 = -model.r_log_likelihood(xv, rv, k_s).value()[0];
    const double term3 = gauss::kl_to_std_normal(gauss::DiagGaussian(mu_k, sigma_k));
    CHECK(loss == doctest::Approx(term1 + term2 + term3).epsilon(1e-4));
}

TEST_CASE("igcm_loss gradients match central finite differences") {
    Rng rng(13);
    IgcmModel model(small_config(2, 2, 2, 3, 2, 2), rng);
    Tensor x = rng.normal_tensor(3, 2), r = rng.normal_tensor(3, 2);
    std::vector<int> y = {1, 0, 1};
    auto build = [&] {
        Rng fixed(607);
        return model.loss(x, r, y, fixed);
    };
    auto value = [&] { return build().value()[0]; };
    CHECK(oracles::grad_check(build, value, model.params(), 1e-5) < 1e-4);
}

TEST_CASE("igcm regression loss gradients match central finite differences") {
    Rng rng(17);
    IgcmRegressor reg(small_config(2, 2, 2, 3, 2, 2), rng);
    Tensor x = rng.normal_tensor(2, 2), r = rng.normal_tensor(2, 2);
    std::vector<double> y = {0.4, -0.9};
    auto build = [&] {
        Rng fixed(811);
        return reg.loss(x, r, y, fixed);
    };
    auto value = [&] { return build().value()[0]; };
    CHECK(oracles::grad_check(build, value, reg.params(), 1e-5) < 1e-4);
}

TEST_CASE("predict: symmetric cost and kernel heads give 0.5^m") {
    Rng rng(19);
    IgcmModel model(small_config(2, 2, 2, 4, 4, 2), rng);
    zero_prefixed(model, "igcm.cost");
    zero_prefixed(model, "igcm.encoder_k");
    // mu_c = mu_k = 0 with equal sigmas: every factor is Phi(0) = 1/2.
    Rng prng(23);
    CHECK(model.predict({0.4, 0.1}, {0.7, -0.3}, prng) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("predictor is strictly increasing in each kernel mean coordinate") {
    Rng rng(29);
    IgcmModel model(small_config(2, 2, 2, 4, 6, 2), rng);
    std::vector<double> x = {0.2, -0.4};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> mu_k = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        std::vector<double> sigma_k = {0.3 + rng.uniform(), 0.3 + rng.uniform()};
        const int coord = static_cast<int>(rng.next_u64() % 2);
        std::vector<double> mu_up = mu_k;
        mu_up[coord] += rng.uniform(1e-3, 1.0);
        Rng a(3000 + trial), b(3000 + trial);
        const double base = model.predict_given_kernel(x, mu_k, sigma_k, a);
        const double up = model.predict_given_kernel(x, mu_up, sigma_k, b);
        CHECK(up > base);
    }
}

TEST_CASE("predict agrees with a kernel-sampling Monte Carlo estimator") {
    Rng rng(31);
    IgcmConfig cfg = small_config(2, 2, 2, 4, 1, 1);
    IgcmModel model(cfg, rng);
    std::vector<double> x = {0.3, -0.6}, r = {0.2, 0.5};

    Rng pr(71);
    const double closed = model.predict(x, r, pr);

    // Same single z draw, then 1e5 kernel draws scored by dominance_prob.
    Rng pr2(71);
    Tensor enc = model.encoder_z().forward_values(Tensor::row(x));
    std::vector<double> z(2);
    for (int d = 0; d < 2; ++d) {
        const double raw = enc.at(0, 2 + d);
        const double sg = 1e-6 + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
        z[d] = enc.at(0, d) + sg * pr2.normal();
    }
    Tensor cost = model.cost_head().forward_values(Tensor::row(z));
    std::vector<double> mu_c(2), sig_c(2);
    for (int i = 0; i < 2; ++i) {
        mu_c[i] = cost.at(0, i);
        const double raw = cost.at(0, 2 + i);
        sig_c[i] = 1e-6 + std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
    }
    gauss::DiagGaussian c_dist(mu_c, sig_c);
    auto [mu_k, sigma_k] = model.kernel_posterior(x, r);

    const int draws = 100000;
    Rng krng(97);
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        std::vector<double> ks(2);
        for (int j = 0; j < 2; ++j) ks[j] = mu_k[j] + sigma_k[j] * krng.normal();
        const double p = gauss::dominance_prob(c_dist, ks);
        acc += p;
        acc2 += p * p;
    }
    const double mc = acc / draws;
    const double se = std::sqrt((acc2 / draws - mc * mc) / draws);
    CHECK(std::abs(closed - mc) < 3.0 * se);
}

TEST_CASE("latent monotone chain: reconstruction mean increases in every k coordinate") {
    Rng rng(37);
    IgcmModel model(small_config(2, 3, 2, 4, 2, 2), rng);
    std::vector<double> x = {0.1, 0.9};
    Tensor wp = model.positive_projection();
    for (double w : wp.data()) CHECK(w > 0.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> k = {rng.normal(), rng.normal(), rng.normal()};
        auto base = model.reconstruction_mean(x, k);
        const int coord = static_cast<int>(rng.next_u64() % 3);
        std::vector<double> k2 = k;
        k2[coord] += rng.uniform(1e-3, 1.0);
        auto up = model.reconstruction_mean(x, k2);
        for (int j = 0; j < 3; ++j) CHECK(up[j] > base[j]);
    }
}

TEST_CASE("kernel KL is non-negative for random models and inputs") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        IgcmModel model(small_config(2, 2, 2, 3, 1, 1), rng);
        auto [mu_k, sigma_k] = model.kernel_posterior(row_of(rng, 2), row_of(rng, 2));
        CHECK(gauss::kl_to_std_normal(gauss::DiagGaussian(mu_k, sigma_k)) >= 0.0);
    }
}

TEST_CASE("igcm serialization round trip preserves predictions") {
    Rng rng(43);
    IgcmConfig cfg = small_config(2, 2, 2, 4, 4, 3);
    IgcmModel model(cfg, rng);
    PreprocessInfo pre;
    pre.x_names = {"a", "b"};
    pre.r_names = {"u", "v"};
    pre.r_signs = {1, 1};
    pre.task = TaskKind::Binary;
    const std::string path = "/tmp/monocost_test_igcm_model.json";
    const std::string cfg_json =
        "{\"x_dim\":2,\"revenue_dim\":2,\"latent_dim\":2,\"kernel_dim\":2,\"hidden_dim\":4,"
        "\"sample_count\":4,\"k_samples\":3}";
    save_model(path, "igcm", cfg_json, model.params(), pre);
    LoadedModel loaded = LoadedModel::load(path);
    Tensor xs = rng.normal_tensor(3, 2), rs = rng.normal_tensor(3, 2);
    Rng p1(7), p2(7);
    auto direct = model.predict_batch(xs, rs, p1);
    auto via = loaded.predict(xs, rs, p2);
    for (int i = 0; i < 3; ++i) CHECK(via[i] == doctest::Approx(direct[i]).epsilon(1e-12));
    std::remove(path.c_str());
}
