#include "monocost/quantile_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "monocost/gauss.hpp"
#include "monocost/rng.hpp"

namespace monocost {

double quantile_sim_mean(double x) {
    return 0.3 * std::sin(2.0 * (x + 0.8)) + 0.4 * std::sin(3.0 * (x - 1.3)) + 0.3 * std::sin(5.0 * x);
}

double quantile_sim_noise_scale(double x) { return 0.2 * (0.8 * x * x + 0.6); }

Dataset simulate_quantile_data(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("simulate_quantile_data: n must be >= 1");
    Rng rng(seed);
    Dataset d;
    d.name = "quantile_sim";
    d.task = TaskKind::Regression;
    d.x = Tensor(n, 1);
    d.r = Tensor(n, 1);
    d.y.resize(n);
    d.x_names = {"x"};
    d.r_names = {"r"};
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.5, 1.5);
        const double eps = rng.normal();
        const double r = rng.uniform();
        d.x.at(i, 0) = x;
        d.r.at(i, 0) = r;
        d.y[i] = quantile_sim_mean(x) + quantile_sim_noise_scale(x) * eps;
    }
    return d;
}

double true_quantile(double x, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("true_quantile: r outside (0,1)");
    return quantile_sim_mean(x) + quantile_sim_noise_scale(x) * gauss::std_normal_quantile(r);
}

}  // namespace monocost
