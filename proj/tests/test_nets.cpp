#include <doctest.h>

#include <cmath>

#include "monocost/monotone.hpp"
#include "monocost/optim.hpp"
#include "monocost/quantile_sim.hpp"
#include "oracles.hpp"

using namespace monocost;

namespace {

void zero_params(const std::vector<Node>& params) {
    for (const Node& p : params) p.get()->value.fill(0.0);
}

void set_scalar_param(const Node& p, double v) { p.get()->value.fill(v); }

}  // namespace

TEST_CASE("positive_transform: analytic values and limits") {
    Node w0 = Node::constant(Tensor::scalar(0.0));
    CHECK(positive_transform(w0).value()[0] == doctest::Approx(std::log(2.0) / 10.0).epsilon(1e-12));

    Node w5 = Node::constant(Tensor::scalar(5.0));
    CHECK(std::abs(positive_transform(w5).value()[0] - 5.0) < 1e-8);

    Node wm5 = Node::constant(Tensor::scalar(-5.0));
    const double v = positive_transform(wm5).value()[0];
    CHECK(v > 0.0);
    CHECK(v == doctest::Approx(std::exp(-50.0) / 10.0).epsilon(1e-6));

    Rng rng(3);
    Node w = Node::param(rng.normal_tensor(3, 3), "w");
    Node pt = positive_transform(w);
    for (double e : pt.value().data()) CHECK(e > 0.0);
    auto build = [&] { return sum_all(square(positive_transform(w))); };
    auto value = [&] { return build().value()[0]; };
    CHECK(oracles::grad_check(build, value, {w}, 1e-6) < 1e-6);
}

TEST_CASE("mlp_forward: zero parameters give zero output") {
    Rng rng(5);
    MlpSpec spec;
    spec.layer_sizes = {3, 8, 8, 2};
    Mlp mlp(spec, rng, "m");
    zero_params(mlp.params());
    Tensor out = mlp.forward_values(rng.normal_tensor(4, 3));
    for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("mlp_forward: single linear layer reproduces matmul plus bias") {
    Rng rng(7);
    MlpSpec spec;
    spec.layer_sizes = {3, 2};
    Mlp mlp(spec, rng, "lin");
    Tensor x = rng.normal_tensor(5, 3);
    Node out = mlp.forward(Node::constant(x));
    Node expect = affine(Node::constant(x), mlp.weight(0), mlp.bias(0));
    for (std::size_t i = 0; i < out.value().size(); ++i)
        CHECK(out.value()[i] == doctest::Approx(expect.value()[i]).epsilon(1e-15));
}

TEST_CASE("mlp_forward: width mismatch raises") {
    Rng rng(9);
    MlpSpec spec;
    spec.layer_sizes = {3, 4, 1};
    Mlp mlp(spec, rng, "m");
    CHECK_THROWS_AS(mlp.forward(Node::constant(Tensor(2, 4))), std::invalid_argument);
}

TEST_CASE("mlp with all-positive weights is non-decreasing in every input") {
    Rng rng(11);
    MlpSpec spec;
    spec.layer_sizes = {2, 6, 6, 1};
    spec.positive_weights = {true, true, true};
    Mlp mlp(spec, rng, "pos");
    // Grid probe: higher input in one coordinate never lowers the output.
    for (int trial = 0; trial < 200; ++trial) {
        Tensor x = rng.normal_tensor(1, 2);
        const int coord = static_cast<int>(rng.next_u64() % 2);
        Tensor x2 = x;
        x2.at(0, coord) += rng.uniform(0.0, 2.0);
        CHECK(mlp.forward_values(x2).at(0, 0) >= mlp.forward_values(x).at(0, 0));
    }
}

TEST_CASE("minmax: one group, one unit degenerates to a monotone linear unit") {
    Rng rng(13);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::MinMax;
    spec.x_dim = 1;
    spec.r_dim = 1;
    spec.groups = 1;
    spec.units_per_group = 1;
    MonotoneNet net(spec, rng, "mm");
    auto params = net.params();  // wx, wr(raw), b
    const double wx = params[0].value()[0];
    const double wr = positive_transform_values(params[1].value())[0];
    const double b = params[2].value()[0];
    for (int i = 0; i < 20; ++i) {
        const double x = rng.normal(), r = rng.normal();
        const double f = net.forward_values(Tensor::scalar(x), Tensor::scalar(r)).at(0, 0);
        CHECK(f == doctest::Approx(x * wx + r * wr + b).epsilon(1e-12));
    }
}

TEST_CASE("minmax: min-of-maxes matches a hand evaluation at r=(0,1)") {
    Rng rng(17);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::MinMax;
    spec.x_dim = 0;
    spec.r_dim = 2;
    spec.groups = 2;
    spec.units_per_group = 2;
    MonotoneNet net(spec, rng, "mm2");
    auto params = net.params();  // per group: wx(0x2), wr(2x2), b(1x2)

    const Tensor r = Tensor::row({0.0, 1.0});
    double hand = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 2; ++g) {
        const Tensor wr = positive_transform_values(params[3 * g + 1].value());
        const Tensor& b = params[3 * g + 2].value();
        double best = -std::numeric_limits<double>::infinity();
        for (int u = 0; u < 2; ++u) {
            const double a = r.at(0, 0) * wr.at(0, u) + r.at(0, 1) * wr.at(1, u) + b.at(0, u);
            best = std::max(best, a);
        }
        hand = std::min(hand, best);
    }
    const double f = net.forward_values(Tensor(1, 0), r).at(0, 0);
    CHECK(f == doctest::Approx(hand).epsilon(1e-14));

    // Tape forward agrees with the value path.
    Node fn = net.forward(Node::constant(Tensor(1, 0)), Node::constant(r));
    CHECK(fn.value()[0] == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("smoothmm converges to minmax as beta grows") {
    Rng rng_a(19), rng_b(19);
    MonotoneNetSpec mm_spec;
    mm_spec.kind = MonotoneKind::MinMax;
    mm_spec.x_dim = 1;
    mm_spec.r_dim = 2;
    MonotoneNetSpec smm_spec = mm_spec;
    smm_spec.kind = MonotoneKind::SmoothMM;
    smm_spec.smoothing_beta = 1e3;
    MonotoneNet mm(mm_spec, rng_a, "net");   // identical init: same seed, same
    MonotoneNet smm(smm_spec, rng_b, "net");  // construction order
    Rng probe(23);
    for (int i = 0; i < 100; ++i) {
        Tensor x = probe.normal_tensor(1, 1);
        Tensor r = probe.normal_tensor(1, 2);
        const double a = mm.forward_values(x, r).at(0, 0);
        const double b = smm.forward_values(x, r).at(0, 0);
        CHECK(std::abs(a - b) < 1e-4);
    }
}

TEST_CASE("strict monotone guarantee for posnn, minmax and smoothmm") {
    Rng rng(29);
    for (MonotoneKind kind : {MonotoneKind::PosNN, MonotoneKind::MinMax, MonotoneKind::SmoothMM}) {
        MonotoneNetSpec spec;
        spec.kind = kind;
        spec.x_dim = 2;
        spec.r_dim = 3;
        spec.hidden = 8;
        MonotoneNet net(spec, rng, "net");
        for (int probe = 0; probe < 1000; ++probe) {
            Tensor x = rng.uniform_tensor(1, 2, -3.0, 3.0);
            Tensor r = rng.uniform_tensor(1, 3, -3.0, 3.0);
            const int coord = static_cast<int>(rng.next_u64() % 3);
            const double base = net.forward_values(x, r).at(0, 0);
            Tensor r_up = r;
            r_up.at(0, coord) += rng.uniform(1e-3, 1.0);
            const double up = net.forward_values(x, r_up).at(0, 0);
            CHECK(up > base);  // strict at delta >= 1e-3
        }
    }
}

TEST_CASE("hint_penalty: zero for a monotone-by-construction model") {
    Rng rng(31);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::PosNN;
    spec.x_dim = 1;
    spec.r_dim = 2;
    spec.hidden = 6;
    MonotoneNet net(spec, rng, "pos");
    Tensor x = rng.normal_tensor(16, 1);
    Tensor r = rng.normal_tensor(16, 2);
    Rng pen_rng(33);
    CHECK(hint_penalty(net, x, r, 64, pen_rng).value()[0] == 0.0);
}

TEST_CASE("hint_penalty: f = -r has mean penalty equal to the mean pair gap") {
    Rng rng(37);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::Plain;
    spec.x_dim = 1;
    spec.r_dim = 1;
    spec.hidden = 0;  // single linear layer
    MonotoneNet net(spec, rng, "lin");
    auto params = net.params();  // wx0, wr0, b0
    set_scalar_param(params[0], 0.0);
    set_scalar_param(params[1], -1.0);
    set_scalar_param(params[2], 0.0);

    Tensor x = rng.normal_tensor(8, 1);
    Tensor r = rng.normal_tensor(8, 1);
    const int pairs = 128;
    Rng pen_rng(41);
    const double penalty = hint_penalty(net, x, r, pairs, pen_rng).value()[0];

    // Replay the penalty's draw sequence: one row index, then one |normal|
    // gap per revenue coordinate.
    Rng replay(41);
    double mean_gap = 0.0;
    for (int p = 0; p < pairs; ++p) {
        (void)replay.next_u64();
        mean_gap += std::abs(replay.normal());
    }
    mean_gap /= pairs;
    CHECK(penalty == doctest::Approx(mean_gap).epsilon(1e-12));
}

TEST_CASE("hint penalty decreases over quantile training") {
    Rng rng(43);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::Plain;
    spec.x_dim = 1;
    spec.r_dim = 1;
    spec.hidden = 8;
    MonotoneNet net(spec, rng, "hint");
    // Start from a deliberately non-monotone model so the penalty is active.
    {
        Tensor& wr = net.params()[1].get()->value;
        for (std::size_t i = 0; i < wr.size(); ++i) wr[i] = -std::abs(wr[i]) - 0.5;
    }
    OptimizerConfig oc;
    oc.learning_rate = 0.01;
    Optimizer opt(oc);
    auto params = net.params();

    Dataset probe = simulate_quantile_data(256, 999);
    Rng probe_rng(47);
    const double before = hint_penalty(net, probe.x, probe.r, 256, probe_rng).value()[0];

    for (int it = 0; it < 500; ++it) {
        Dataset batch = simulate_quantile_data(20, 1000 + it);
        Node f = net.forward(Node::constant(batch.x), Node::constant(batch.r));
        std::vector<double> lvl(20);
        for (int i = 0; i < 20; ++i) lvl[i] = batch.r.at(i, 0);
        Node delta = sub(Node::constant(Tensor::col(batch.y)), f);
        Node lvl_n = Node::constant(Tensor::col(lvl));
        Node rho = mean_all(add(mul(lvl_n, relu(delta)), mul(shift(neg(lvl_n), 1.0), relu(neg(delta)))));
        Node loss = add(rho, hint_penalty(net, batch.x, batch.r, 20, rng));
        backward(loss);
        opt.step(params);
    }
    Rng probe_rng2(47);
    const double after = hint_penalty(net, probe.x, probe.r, 256, probe_rng2).value()[0];
    CHECK(after < before);
}

TEST_CASE("pwl_penalty: analytic values on linear models") {
    Rng rng(53);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::Plain;
    spec.x_dim = 1;
    spec.r_dim = 3;
    spec.hidden = 0;
    MonotoneNet net(spec, rng, "lin");
    auto params = net.params();
    set_scalar_param(params[0], 0.3);
    set_scalar_param(params[1], 1.0);  // f = x*0.3 + sum(r) + b
    Tensor x = rng.normal_tensor(10, 1);
    Tensor r = rng.normal_tensor(10, 3);
    CHECK(pwl_penalty(net, x, r, 10).value()[0] == 0.0);

    MonotoneNetSpec spec1 = spec;  // 1-D: f = -r
    spec1.r_dim = 1;
    MonotoneNet net1(spec1, rng, "lin1");
    auto p1 = net1.params();
    set_scalar_param(p1[0], 0.0);
    set_scalar_param(p1[1], -1.0);
    set_scalar_param(p1[2], 0.0);
    CHECK(pwl_penalty(net1, rng.normal_tensor(6, 1), rng.normal_tensor(6, 1), 6).value()[0] ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pwl tape partials agree with finite differences of the forward pass") {
    Rng rng(59);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::Plain;
    spec.x_dim = 2;
    spec.r_dim = 2;
    spec.hidden = 8;
    MonotoneNet net(spec, rng, "plain");
    Tensor x = rng.normal_tensor(5, 2);
    Tensor r = rng.normal_tensor(5, 2);
    Node g = net.r_gradient(Node::constant(x), Node::constant(r));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) {
            auto f = [&](double v) {
                Tensor r2 = r;
                r2.at(i, j) = v;
                return net.forward_values(x, r2).at(i, 0);
            };
            const double fd = oracles::central_diff(f, r.at(i, j), 1e-5);
            CHECK(oracles::rel_err(g.value().at(i, j), fd) < 1e-4);
        }
}

TEST_CASE("pwl_penalty gradient wrt parameters via finite differences") {
    Rng rng(61);
    MonotoneNetSpec spec;
    spec.kind = MonotoneKind::Plain;
    spec.x_dim = 1;
    spec.r_dim = 2;
    spec.hidden = 4;
    MonotoneNet net(spec, rng, "plain");
    Tensor x = rng.normal_tensor(6, 1);
    Tensor r = rng.normal_tensor(6, 2);
    auto build = [&] { return pwl_penalty(net, x, r, 6); };
    auto value = [&] { return build().value()[0]; };
    CHECK(oracles::grad_check(build, value, net.params(), 1e-6) < 1e-4);
}

TEST_CASE("squash_revenue: analytic point, order preservation, inverse") {
    CHECK(squash_revenue({0.0})[0] == doctest::Approx(0.5).epsilon(1e-15));

    Rng rng(67);
    for (int i = 0; i < 10000; ++i) {
        const double a = 8.0 * rng.normal();
        const double gap = rng.uniform(1e-6, 3.0);
        const auto s = squash_revenue({a, a + gap});
        CHECK(s[0] < s[1]);
        CHECK(s[0] > 0.0);
        CHECK(s[1] < 1.0);
    }

    // Round trip at full double fidelity on [-12, 12]; towards +/-30 the
    // sigmoid saturates and the representable error grows like
    // ulp(1)/(p(1-p)), so only a coarser bound is attainable there.
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-12.0, 12.0);
        CHECK(std::abs(unsquash_revenue(squash_revenue({x}))[0] - x) < 1e-10);
        const double xt = rng.uniform(-30.0, 30.0);
        CHECK(std::abs(unsquash_revenue(squash_revenue({xt}))[0] - xt) < 4e-3);
    }
    CHECK_THROWS_AS(unsquash_revenue({0.0}), std::domain_error);
    CHECK_THROWS_AS(unsquash_revenue({1.0}), std::domain_error);
}
