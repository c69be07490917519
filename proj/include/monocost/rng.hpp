#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "monocost/tensor.hpp"

namespace monocost {

// Seeded RNG with a self-contained normal sampler (Marsaglia polar method) so
// that trajectories are reproducible independent of the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1), 53-bit mantissa straight from the engine
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double k = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * k;
        has_spare_ = true;
        return u * k;
    }

    Tensor normal_tensor(int rows, int cols) {
        Tensor t(rows, cols);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal();
        return t;
    }

    Tensor uniform_tensor(int rows, int cols, double lo, double hi) {
        Tensor t(rows, cols);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
        return t;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(gen_() % static_cast<std::uint64_t>(i + 1));
            std::swap(idx[i], idx[j]);
        }
        return idx;
    }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace monocost
