#pragma once

#include <cstdint>

#include "monocost/dataset.hpp"

namespace monocost {

// Deterministic part of the simulated response:
// 0.3 sin(2(x+0.8)) + 0.4 sin(3(x-1.3)) + 0.3 sin(5x).
double quantile_sim_mean(double x);

// Heteroscedastic noise scale 0.2 (0.8 x^2 + 0.6).
double quantile_sim_noise_scale(double x);

// x ~ U(-1.5, 1.5), y = mean(x) + scale(x) * eps with eps ~ N(0,1), and the
// revenue column r ~ U(0,1) drawn independently of eps.
Dataset simulate_quantile_data(int n, std::uint64_t seed);

// Ground-truth r-th conditional quantile: mean(x) + scale(x) * Phi^{-1}(r).
double true_quantile(double x, double r);

}  // namespace monocost
