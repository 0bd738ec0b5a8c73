#pragma once

#include <cmath>
#include <random>

namespace lrmc {

template <class Engine>
double NoiseModel::sample(Engine& engine) const {
    if (sigma == 0.0) return 0.0;
    switch (kind) {
    case NoiseKind::gaussian:
        return std::normal_distribution<double>(0.0, sigma)(engine);
    case NoiseKind::laplace: {
        // Inverse CDF with scale b = sigma / sqrt(2) so that Var = 2 b^2 = sigma^2.
        const double b = sigma / std::sqrt(2.0);
        double u = 0.0;
        do {
            u = std::uniform_real_distribution<double>(-0.5, 0.5)(engine);
        } while (u == -0.5);
        return u < 0 ? b * std::log1p(2.0 * u) : -b * std::log1p(-2.0 * u);
    }
    case NoiseKind::bounded_uniform: {
        const double half = sigma * std::sqrt(3.0);
        return std::uniform_real_distribution<double>(-half, half)(engine);
    }
    }
    return 0.0;
}

} // namespace lrmc
